"""Gamma function and product-integration weights for weakly singular kernels.

The weights in this module integrate a piecewise-linear density exactly
against the Abel kernel ``(r - t)**(s - 1)`` (left) or ``(t - r)**(s - 1)``
(right).  The same cell moments are reused by :mod:`fracspec.fracops` for the
hypersingular difference integrals, where the exponent is ``-alpha - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "gamma_fn",
    "cell_moments",
    "SingularRule",
    "product_weights",
]


def gamma_fn(x: float) -> float:
    """Gamma function for positive real arguments.

    Backed by :func:`math.gamma` (correctly rounded to a few ulp on the
    positive axis).  Poles and negative arguments are never needed by the
    operator constants, so they are rejected.
    """
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise ValidationError(f"gamma_fn requires a finite positive argument, got {x!r}")
    return math.gamma(x)


def _excess_power(q: float, x: np.ndarray) -> np.ndarray:
    """``(1 + x)**q - 1 - q*x`` without cancellation for small ``x``."""
    out = np.empty_like(x)
    small = np.abs(x) < 0.125
    xs = x[small]
    if xs.size:
        coef = q * (q - 1.0) / 2.0
        power = xs * xs
        acc = coef * power
        # |x| < 1/8 gives 1e-17 relative truncation after 18 terms
        for k in range(3, 21):
            coef *= (q - k + 1.0) / k
            power = power * xs
            acc = acc + coef * power
        out[small] = acc
    xl = x[~small]
    if xl.size:
        out[~small] = np.expm1(q * np.log1p(xl)) - q * xl
    return out


def cell_moments(p: float, b, h) -> tuple[np.ndarray, np.ndarray]:
    """Moments of ``u**p`` over ``[b, b + h]``.

    Returns
    -------
    I : ndarray
        ``int_b^{b+h} u**p du``
    J : ndarray
        ``int_b^{b+h} u**p (b + h - u) du``

    ``b`` must be nonnegative and ``h`` positive.  When ``b == 0`` the
    integrals only exist for ``p > -1``; callers integrating the
    hypersingular kernel never pass a zero offset.
    """
    b, h = np.broadcast_arrays(np.asarray(b, dtype=float), np.asarray(h, dtype=float))
    b = b.copy()
    h = h.copy()
    moment0 = np.empty(b.shape)
    moment1 = np.empty(b.shape)
    at_zero = b == 0.0
    if np.any(at_zero):
        if p <= -1.0:
            raise ValidationError("moment of a non-integrable power at the origin")
        hz = h[at_zero]
        moment0[at_zero] = hz ** (p + 1.0) / (p + 1.0)
        moment1[at_zero] = hz ** (p + 2.0) / ((p + 1.0) * (p + 2.0))
    off = ~at_zero
    if np.any(off):
        bb = b[off]
        x = h[off] / bb
        moment0[off] = bb ** (p + 1.0) * np.expm1((p + 1.0) * np.log1p(x)) / (p + 1.0)
        moment1[off] = bb ** (p + 2.0) * _excess_power(p + 2.0, x) / ((p + 1.0) * (p + 2.0))
    return moment0, moment1


@dataclass(frozen=True)
class SingularRule:
    """Product-integration weights for one kernel exponent on one grid.

    ``weights[i, j]`` multiplies ``g(t_j)`` in the approximation of the
    kernel integral evaluated at target node ``t_i``.
    """

    nodes: np.ndarray
    exponent: float
    endpoint: str
    weights: np.ndarray

    def apply(self, values) -> np.ndarray:
        return self.weights @ np.asarray(values)


def _check_grid(nodes) -> np.ndarray:
    t = np.asarray(nodes, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ValidationError("grid needs at least two nodes")
    if not np.all(np.diff(t) > 0.0):
        raise ValidationError("grid nodes must be strictly increasing")
    return t


def _left_weights(t: np.ndarray, s: float) -> np.ndarray:
    npts = t.size
    i_idx, j_idx = np.tril_indices(npts, k=-1)  # cell j=[t_j, t_{j+1}] lies left of target i
    h = t[j_idx + 1] - t[j_idx]
    b = t[i_idx] - t[j_idx + 1]
    b[b < 0.0] = 0.0
    m0, m1 = cell_moments(s - 1.0, b, h)
    w = np.zeros((npts, npts))
    # basis value 1 at t_j is (u - b)/h in u = r - t; at t_{j+1} it is (a - u)/h
    np.add.at(w, (i_idx, j_idx), m0 - m1 / h)
    np.add.at(w, (i_idx, j_idx + 1), m1 / h)
    return w


def product_weights(grid, s: float, endpoint: str = "left") -> SingularRule:
    """Weights reproducing ``int g(t) |r - t|**(s-1) dt`` for piecewise-linear ``g``.

    Parameters
    ----------
    grid : array_like or RadialGrid
        Strictly increasing nodes ``t_0 < ... < t_N``.
    s : float
        Kernel exponent in ``(0, 1]``; ``s = 1`` gives trapezoid weights.
    endpoint : {"left", "right"}
        ``"left"`` integrates over ``[t_0, r]``, ``"right"`` over ``[r, t_N]``.
    """
    nodes = getattr(grid, "nodes", grid)
    t = _check_grid(nodes)
    s = float(s)
    if not (0.0 < s <= 1.0):
        raise ValidationError(f"kernel exponent must lie in (0, 1], got {s}")
    if endpoint == "left":
        w = _left_weights(t, s)
    elif endpoint == "right":
        mirrored = t[-1] - t[::-1]
        w = _left_weights(mirrored, s)[::-1, ::-1].copy()
    else:
        raise ValidationError(f"endpoint must be 'left' or 'right', got {endpoint!r}")
    return SingularRule(nodes=t, exponent=s, endpoint=endpoint, weights=w)
