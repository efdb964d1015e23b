"""Directional fractional integrals and derivatives along rays.

All operators act ray by ray on :class:`~fracspec.geometry.GridFunction`
values.  On a ray of length ``d`` the nodes are ``d * s`` for the reference
nodes ``s`` of the radial grid, so every matrix is a power of ``d`` times a
matrix built once on ``s`` and cached.

Discretization summary
----------------------
* Integrals: product integration of the piecewise-linear interpolant of the
  density (times ``(t/r)**(n-1)`` on the left side) against the Abel kernel.
* Left derivative ``D_{0+}``: the difference integral is split at the last
  cell.  Far cells integrate the linear interpolant of ``f(t)(t/r)**(n-1)``
  exactly against ``(r-t)**(-alpha-1)``; the last cell uses the closed form
  for a linear function, so no hypersingular quadrature is ever formed.
* Truncated derivative: same far-cell moments, cut at ``t = r - eps``.
* Kipriyanov derivative: the bracket ``f(r) - f(t)`` is interpolated instead,
  plus ``C_n f r**(-alpha)``.  It is built independently of ``D_{0+}`` so the
  two can be compared.
* Right-side operators are the left-side ones with ``n = 1`` on the mirrored
  grid ``d - t``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate
from scipy.special import binom

from .errors import ValidationError
from .geometry import GridFunction, holder_estimate, weighted_inner_product, weighted_norm
from .quadrature import cell_moments, gamma_fn, product_weights

__all__ = [
    "FractionalOrder",
    "TruncationParam",
    "HolderWeight",
    "Side",
    "LimitDiagnostic",
    "left_integral_matrix",
    "right_integral_matrix",
    "left_derivative_matrix",
    "right_derivative_matrix",
    "truncated_left_matrix",
    "truncated_right_matrix",
    "kipriyanov_matrix",
    "frac_integral",
    "frac_derivative",
    "truncated_frac_derivative",
    "frac_derivative_limit",
    "kipriyanov_derivative",
    "cn_alpha",
    "cn_alpha_series",
    "kernel_K",
    "kernel_mass",
    "adjoint_residual",
    "fubini_residual",
    "representability_solve",
    "integral_bound",
]


class TruncationWarning(UserWarning):
    """Truncation parameter outside the range where it is meaningful."""


class Side(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"

    @classmethod
    def parse(cls, side) -> "Side":
        try:
            return cls(getattr(side, "value", side))
        except ValueError:
            raise ValidationError(f"side must be 'left' or 'right', got {side!r}") from None


@dataclass(frozen=True)
class FractionalOrder:
    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not (0.0 < a < 1.0):
            raise ValidationError(f"fractional order must lie strictly between 0 and 1, got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    def __float__(self) -> float:
        return self.alpha


@dataclass(frozen=True)
class TruncationParam:
    eps: float

    def __post_init__(self):
        e = float(self.eps)
        if not (math.isfinite(e) and e > 0.0):
            raise ValidationError(f"truncation parameter must be positive, got {self.eps!r}")
        object.__setattr__(self, "eps", e)

    def __float__(self) -> float:
        return self.eps


@dataclass(frozen=True, eq=False)
class HolderWeight:
    """Positive weight ``rho`` with Hölder exponent ``lam`` and constant ``M``.

    ``M_is_analytic`` tells whether ``M`` was supplied by the caller or is
    the sampled lower bound from :func:`~fracspec.geometry.holder_estimate`.
    """

    rho: GridFunction
    lam: float
    M: float
    inf_rho: float
    monotone: bool
    M_is_analytic: bool = False

    @classmethod
    def from_samples(cls, rho: GridFunction, lam: float, alpha, M: float | None = None,
                     monotone: bool | None = None) -> "HolderWeight":
        est = holder_estimate(rho, lam, _alpha(alpha))
        if M is not None and M < 0.0:
            raise ValidationError("Hölder constant must be nonnegative")
        return cls(
            rho=rho,
            lam=float(lam),
            M=est.M if M is None else float(M),
            inf_rho=est.inf_rho,
            monotone=est.monotone if monotone is None else bool(monotone),
            M_is_analytic=M is not None,
        )


def _alpha(alpha) -> float:
    if isinstance(alpha, FractionalOrder):
        return alpha.alpha
    return FractionalOrder(alpha).alpha


# ---------------------------------------------------------------- constants

def cn_alpha(n: int, alpha) -> float:
    """``(n-1)! / Gamma(n - alpha)``, the boundary coefficient of the Kipriyanov derivative."""
    n = int(n)
    if n < 1:
        raise ValidationError("dimension must be a positive integer")
    a = _alpha(alpha)
    return math.factorial(n - 1) / gamma_fn(n - a)


def cn_alpha_series(n: int, alpha) -> float:
    """``1/Gamma(1-alpha) + alpha * sum_{i=0}^{n-2} i!/Gamma(2-alpha+i)``.

    Equals :func:`cn_alpha` for every ``n >= 1``; it is the sum obtained by
    applying ``D_{0+}`` to a constant term by term, used as a cross-check.
    """
    n = int(n)
    if n < 1:
        raise ValidationError("dimension must be a positive integer")
    a = _alpha(alpha)
    total = 1.0 / gamma_fn(1.0 - a)
    for i in range(n - 1):
        total += a * math.factorial(i) / gamma_fn(2.0 - a + i)
    return total


def integral_bound(alpha, diameter: float) -> float:
    """Operator-norm bound ``diam**alpha / Gamma(alpha + 1)`` for the integrals."""
    a = _alpha(alpha)
    return diameter ** a / gamma_fn(a + 1.0)


def kernel_K(t, alpha):
    """``sin(alpha pi)/pi * (t_+**alpha - (t-1)_+**alpha) / t``; zero for ``t <= 0``."""
    a = _alpha(alpha)
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    c = math.sin(a * math.pi) / math.pi
    mid = (t > 0.0) & (t <= 1.0)
    out[mid] = c * t[mid] ** (a - 1.0)
    big = t > 1.0
    tb = t[big]
    # t**a - (t-1)**a = -t**a * expm1(a*log1p(-1/t)) avoids cancellation at large t
    out[big] = -c * tb ** (a - 1.0) * np.expm1(a * np.log1p(-1.0 / tb))
    return out if out.ndim else float(out)


def kernel_mass(alpha, split: float = 64.0, tail_terms: int = 40) -> float:
    """``int_0^inf K(t) dt`` from three independently evaluated pieces.

    ``[0, 1]`` in closed form, ``[1, split]`` by adaptive quadrature with the
    algebraic endpoint weight ``(t-1)**alpha``, and ``[split, inf)`` by the
    binomial expansion of ``1 - (1 - 1/t)**alpha``.
    """
    a = _alpha(alpha)
    c = math.sin(a * math.pi) / math.pi
    head = 1.0 / a
    first, _ = integrate.quad(lambda t: t ** (a - 1.0), 1.0, split, epsabs=0.0, epsrel=1e-13, limit=200)
    second, _ = integrate.quad(lambda t: 1.0 / t, 1.0, split, weight="alg", wvar=(a, 0.0),
                               epsabs=0.0, epsrel=1e-13, limit=200)
    tail = 0.0
    for k in range(1, tail_terms + 1):
        tail -= binom(a, k) * (-1.0) ** k * split ** (a - k) / (k - a)
    return c * (head + first - second + tail)


# ---------------------------------------------------------- matrix builders

def _nodes(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t.size < 3 or t[0] != 0.0 or not np.all(np.diff(t) > 0.0):
        raise ValidationError("ray nodes must increase strictly from 0 with at least two cells")
    return t


def _geometric(t: np.ndarray, n: int) -> np.ndarray:
    """``(t_j / t_i)**(n-1)`` with row 0 set to zero."""
    g = np.zeros((t.size, t.size))
    if n == 1:
        g[1:] = 1.0
    else:
        g[1:] = (t[None, :] / t[1:, None]) ** (n - 1)
    return g


def left_integral_matrix(t, alpha, n: int = 1) -> np.ndarray:
    """``(1/Gamma(a)) int_0^r g(t)(r-t)**(a-1)(t/r)**(n-1) dt`` at every node."""
    t = _nodes(t)
    a = _alpha(alpha)
    w = product_weights(t, a, "left").weights
    return w * _geometric(t, n) / gamma_fn(a)


def right_integral_matrix(t, alpha) -> np.ndarray:
    """``(1/Gamma(a)) int_r^d g(t)(t-r)**(a-1) dt`` at every node."""
    t = _nodes(t)
    a = _alpha(alpha)
    return product_weights(t, a, "right").weights / gamma_fn(a)


def _far_moments(t: np.ndarray, p: float, eps: float | None):
    """Moments of ``u**p`` over the parts of cells with ``u = r_i - t >= cutoff``.

    Without ``eps`` the last cell of each row is excluded (it is handled in
    closed form); with ``eps`` the cut sits at ``u = eps``.  Returns index
    arrays and the weights for the left and right node of each cell.
    """
    i_idx, j_idx = np.tril_indices(t.size, k=-1)
    h = t[j_idx + 1] - t[j_idx]
    lo = t[i_idx] - t[j_idx + 1]
    hi = t[i_idx] - t[j_idx]
    if eps is None:
        keep = j_idx <= i_idx - 2
        start = lo
    else:
        keep = hi > eps
        start = np.maximum(lo, eps)
    i_idx, j_idx, h, lo, hi, start = (x[keep] for x in (i_idx, j_idx, h, lo, hi, start))
    m0, m1 = cell_moments(p, start, hi - start)
    # hat of node j is (u - lo)/h, hat of node j+1 is (hi - u)/h
    return i_idx, j_idx, m0 - m1 / h, m1 / h


def _scatter(npts: int, i_idx, j_idx, w_left, w_right) -> np.ndarray:
    out = np.zeros((npts, npts))
    np.add.at(out, (i_idx, j_idx), w_left)
    np.add.at(out, (i_idx, j_idx + 1), w_right)
    return out


def left_derivative_matrix(t, alpha, n: int = 1) -> np.ndarray:
    """Discrete ``D_{0+}`` (the limit of the truncated derivative).

    Row ``i`` approximates
    ``f(r)r**(-a)/G(1-a) + a/G(1-a) int_0^r [f(r) - f(t)(t/r)**(n-1)](r-t)**(-a-1) dt``
    with the linear interpolant of ``f(t)(t/r)**(n-1)``.  Row 0 is zero
    because ``r = 0`` is the ray base, which is excluded from all norms.
    """
    t = _nodes(t)
    a = _alpha(alpha)
    npts = t.size
    geo = _geometric(t, n)
    i_idx, j_idx, wl, wr = _far_moments(t, -a - 1.0, None)
    far = _scatter(npts, i_idx, j_idx, wl, wr) * geo

    rows = np.arange(1, npts)
    r = t[rows]
    h_last = t[rows] - t[rows - 1]
    sliver = h_last ** (-a) / (1.0 - a)
    mat = -far
    mat[rows, rows] += (h_last ** (-a) - r ** (-a)) / a + sliver
    mat[rows, rows - 1] -= sliver * geo[rows, rows - 1]
    mat *= a / gamma_fn(1.0 - a)
    mat[rows, rows] += r ** (-a) / gamma_fn(1.0 - a)
    mat[0] = 0.0
    return mat


def truncated_left_matrix(t, alpha, eps: float, n: int = 1) -> np.ndarray:
    """Discrete ``D_{0+,eps}`` with both branches of the truncated difference.

    For ``r >= eps`` the difference integral runs over ``[0, r - eps]``; for
    ``r < eps`` it is ``(f/a)(eps**(-a) - r**(-a))``, so the total operator
    there is ``f eps**(-a)/G(1-a)``, finite even at ``r = 0``.
    """
    t = _nodes(t)
    a = _alpha(alpha)
    eps = float(TruncationParam(eps))
    npts = t.size
    geo = _geometric(t, n)
    i_idx, j_idx, wl, wr = _far_moments(t, -a - 1.0, eps)
    far = _scatter(npts, i_idx, j_idx, wl, wr) * geo
    mat = -(a / gamma_fn(1.0 - a)) * far
    # both branches give eps**(-a)/G(1-a) on the diagonal once r**(-a) cancels
    mat[np.arange(npts), np.arange(npts)] += eps ** (-a) / gamma_fn(1.0 - a)
    return mat


def _mirror(mat: np.ndarray) -> np.ndarray:
    return mat[::-1, ::-1].copy()


def right_derivative_matrix(t, alpha) -> np.ndarray:
    """Discrete ``D_{d-}``; row ``N`` (the far chord end) is zero."""
    t = _nodes(t)
    return _mirror(left_derivative_matrix(t[-1] - t[::-1], alpha, 1))


def truncated_right_matrix(t, alpha, eps: float) -> np.ndarray:
    t = _nodes(t)
    return _mirror(truncated_left_matrix(t[-1] - t[::-1], alpha, eps, 1))


def kipriyanov_matrix(t, alpha, n: int = 1) -> np.ndarray:
    """Discrete Kipriyanov derivative.

    ``a/G(1-a) int_0^r [f(r) - f(t)](r-t)**(-a-1)(t/r)**(n-1) dt + C_n f r**(-a)``.
    Far cells integrate the interpolated bracket times the geometric factor;
    on the last cell the bracket is linear and the geometric factor is
    expanded binomially, which integrates in closed form.
    """
    t = _nodes(t)
    a = _alpha(alpha)
    npts = t.size
    geo = _geometric(t, n)
    i_idx, j_idx, wl, wr = _far_moments(t, -a - 1.0, None)
    w = _scatter(npts, i_idx, j_idx, wl, wr) * geo
    mat = -w
    mat[np.arange(npts), np.arange(npts)] += w.sum(axis=1)

    rows = np.arange(1, npts)
    r = t[rows]
    h_last = r - t[rows - 1]
    sliver = np.zeros(rows.size)
    for k in range(n):
        sliver += binom(n - 1, k) * (-1.0 / r) ** k * h_last ** (k + 1.0 - a) / (k + 1.0 - a)
    slope = sliver / h_last
    mat[rows, rows] += slope
    mat[rows, rows - 1] -= slope
    mat *= a / gamma_fn(1.0 - a)
    mat[rows, rows] += cn_alpha(n, a) * r ** (-a)
    mat[0] = 0.0
    return mat


# ----------------------------------------------------- grid-function layer

@lru_cache(maxsize=64)
def _reference(kind: str, key: bytes, size: int, alpha: float, n: int, eps: float | None) -> np.ndarray:
    s = np.frombuffer(key, dtype=float, count=size)
    if kind == "I_left":
        mat = left_integral_matrix(s, alpha, n)
    elif kind == "I_right":
        mat = right_integral_matrix(s, alpha)
    elif kind == "D_left":
        mat = left_derivative_matrix(s, alpha, n)
    elif kind == "D_right":
        mat = right_derivative_matrix(s, alpha)
    elif kind == "T_left":
        mat = truncated_left_matrix(s, alpha, eps, n)
    elif kind == "T_right":
        mat = truncated_right_matrix(s, alpha, eps)
    elif kind == "Kipriyanov":
        mat = kipriyanov_matrix(s, alpha, n)
    else:
        raise ValidationError(f"unknown operator kind {kind!r}")
    mat.setflags(write=False)
    return mat


_POWER = {"I_left": 1.0, "I_right": 1.0}


def ray_matrix(kind: str, nodes, length: float, alpha, n: int, eps: float | None = None) -> np.ndarray:
    """Operator matrix on a ray of ``length`` with normalised ``nodes``.

    Integral kinds scale as ``length**alpha``, derivative kinds as
    ``length**(-alpha)``; truncation ``eps`` is rescaled to ``eps/length``.
    """
    a = _alpha(alpha)
    s = np.ascontiguousarray(nodes, dtype=float)
    ref_eps = None if eps is None else float(eps) / length
    mat = _reference(kind, s.tobytes(), s.size, a, int(n), ref_eps)
    return mat * length ** (a if kind in _POWER else -a)


def _apply(kind: str, f: GridFunction, alpha, eps: float | None = None) -> GridFunction:
    n = f.dim
    out = np.empty_like(f.values, dtype=np.result_type(f.values, float))
    for k, d in enumerate(f.fan.lengths):
        out[k] = ray_matrix(kind, f.grid.nodes, d, alpha, n, eps) @ f.values[k]
    return f.with_values(out)


def frac_integral(g: GridFunction, alpha, side="left") -> GridFunction:
    """Directional fractional integral of ``g`` along every ray."""
    side = Side.parse(side)
    return _apply("I_left" if side is Side.LEFT else "I_right", g, alpha)


def frac_derivative(f: GridFunction, alpha, side="left") -> GridFunction:
    """Discrete ``D_{0+}`` or ``D_{d-}`` (truncation removed analytically on the last cell)."""
    side = Side.parse(side)
    return _apply("D_left" if side is Side.LEFT else "D_right", f, alpha)


def _check_eps(eps: float, f: GridFunction) -> None:
    longest = float(f.fan.lengths.max())
    spacing = float(np.min(np.diff(f.grid.nodes)) * f.fan.lengths.min())
    if eps >= f.fan.domain.diameter or eps >= longest:
        warnings.warn(
            f"truncation {eps:g} is not below the chord length; the closed-form branch applies everywhere",
            TruncationWarning, stacklevel=3,
        )
    elif eps <= spacing:
        warnings.warn(
            f"truncation {eps:g} does not exceed the smallest grid spacing {spacing:g}",
            TruncationWarning, stacklevel=3,
        )


def truncated_frac_derivative(f: GridFunction, alpha, eps, side="left") -> GridFunction:
    """``f r**(-a)/G(1-a) + a/G(1-a) psi_eps f`` (left) or its mirror (right)."""
    side = Side.parse(side)
    eps = float(TruncationParam(float(eps)))
    _check_eps(eps, f)
    return _apply("T_left" if side is Side.LEFT else "T_right", f, alpha, eps)


# smallest decay exponent of successive differences read as a Cauchy sequence
CAUCHY_MIN_SLOPE = 0.1


class LimitDiagnostic(NamedTuple):
    eps: np.ndarray
    differences: np.ndarray
    relative_differences: np.ndarray
    slope: float
    status: str
    discretization_error: float
    converged: bool


def _interior_mask(f: GridFunction, side: Side) -> np.ndarray:
    mask = np.ones(f.values.shape, dtype=bool)
    mask[:, 0 if side is Side.LEFT else -1] = False
    return mask


def frac_derivative_limit(
    f: GridFunction,
    alpha,
    side="left",
    eps_schedule: Sequence[float] | None = None,
    floor_cells: float = 4.0,
    slope_window: int = 4,
    min_slope: float = CAUCHY_MIN_SLOPE,
) -> tuple[GridFunction, LimitDiagnostic]:
    """Follow ``D_eps f`` along a decreasing schedule of truncations.

    The default schedule is ``diam * 2**-k`` down to ``floor_cells`` times the
    largest physical grid spacing.  Entries of a supplied schedule below that
    floor are dropped with a warning.

    The diagnostic holds the successive weighted L2 differences (base node
    excluded).  ``slope`` is the least-squares exponent ``s`` in
    ``diff ~ eps**s`` over the last ``slope_window`` differences.  Geometric
    decay with ``s >= min_slope`` is read as a Cauchy sequence
    (``status='representable'``); flat or growing differences mean the
    iterates do not settle (``'non-representable'``).  ``converged`` compares
    the last relative difference with ten times the discretization error,
    estimated by recomputing the last iterate on every second node.
    """
    side = Side.parse(side)
    a = _alpha(alpha)
    h_max = float(np.max(np.diff(f.grid.nodes)) * f.fan.lengths.max())
    floor = floor_cells * h_max
    diam = f.fan.domain.diameter
    if eps_schedule is None:
        sched = []
        k = 1
        while diam * 2.0 ** (-k) >= floor:
            sched.append(diam * 2.0 ** (-k))
            k += 1
    else:
        sched = [float(e) for e in eps_schedule]
        if len(sched) == 0 or any(not (e > 0.0) for e in sched):
            raise ValidationError("truncation schedule must be nonempty and positive")
        if np.any(np.diff(sched) >= 0.0):
            raise ValidationError("truncation schedule must be strictly decreasing")
        kept = [e for e in sched if e >= floor]
        if len(kept) < len(sched):
            warnings.warn(
                f"schedule truncated at {floor:g}: {len(sched) - len(kept)} entries below grid resolution",
                TruncationWarning, stacklevel=2,
            )
        sched = kept
    if len(sched) < 2:
        raise ValidationError("truncation schedule needs at least two entries above grid resolution")

    kind = "T_left" if side is Side.LEFT else "T_right"
    mask = _interior_mask(f, side)
    iterates = [_apply(kind, f, a, e) for e in sched]
    diffs = np.array([weighted_norm(iterates[k + 1] - iterates[k], mask) for k in range(len(sched) - 1)])
    norms = np.array([weighted_norm(it, mask) for it in iterates[1:]])
    rel = np.divide(diffs, norms, out=np.zeros_like(diffs), where=norms > 0.0)

    eps_arr = np.asarray(sched)
    window = slice(max(0, diffs.size - slope_window), diffs.size)
    ok = diffs[window] > 0.0
    if np.count_nonzero(ok) >= 2:
        x = np.log(eps_arr[1:][window][ok])
        y = np.log(diffs[window][ok])
        slope = float(np.polyfit(x, y, 1)[0])
    else:
        slope = math.inf
    status = "representable" if slope >= min_slope else "non-representable"

    last = iterates[-1]
    disc = _coarse_discrepancy(f, a, sched[-1], kind, last, mask)
    converged = bool(rel[-1] <= 10.0 * disc) if status == "representable" else False
    diag = LimitDiagnostic(eps_arr, diffs, rel, slope, status, disc, converged)
    return last, diag


def _coarse_discrepancy(f, alpha, eps, kind, fine: GridFunction, mask) -> float:
    """Relative gap between the fine iterate and one computed on every second node."""
    s = f.grid.nodes
    if s.size < 5:
        return 0.0
    idx = np.arange(0, s.size, 2)
    if idx[-1] != s.size - 1:
        idx = np.append(idx, s.size - 1)
    sc = s[idx]
    diff = np.zeros_like(fine.values)
    for k, d in enumerate(f.fan.lengths):
        coarse = ray_matrix(kind, sc, d, alpha, f.dim, eps) @ f.values[k, idx]
        diff[k, idx] = coarse - fine.values[k, idx]
    sub = np.zeros(mask.shape, dtype=bool)
    sub[:, idx] = True
    denom = weighted_norm(fine, mask & sub)
    if denom == 0.0:
        return 0.0
    return weighted_norm(fine.with_values(diff), mask & sub) / denom


def kipriyanov_derivative(f: GridFunction, alpha) -> GridFunction:
    """Kipriyanov derivative of ``f`` along the rays from the base point."""
    return _apply("Kipriyanov", f, alpha)


def adjoint_residual(phi: GridFunction, psi: GridFunction, alpha) -> float:
    """``|(D_{0+} f, g) - (f, D_{d-} g)|`` for ``f = I_{0+} phi`` and ``g = I_{d-} psi``."""
    f = frac_integral(phi, alpha, "left")
    g = frac_integral(psi, alpha, "right")
    lhs = weighted_inner_product(frac_derivative(f, alpha, "left"), g)
    rhs = weighted_inner_product(f, frac_derivative(g, alpha, "right"))
    return abs(lhs - rhs)


def fubini_residual(phi: GridFunction, psi: GridFunction, alpha) -> float:
    """``|(phi, I_{d-} psi) - (I_{0+} phi, psi)|``; vanishes as the grid is refined."""
    lhs = weighted_inner_product(phi, frac_integral(psi, alpha, "right"))
    rhs = weighted_inner_product(frac_integral(phi, alpha, "left"), psi)
    return abs(lhs - rhs)


def representability_solve(weight: HolderWeight, f: GridFunction, alpha) -> tuple[GridFunction, float]:
    """Density ``phi = D_{0+}(rho f)`` and ``||I_{0+} phi - rho f|| / ||rho f||``."""
    target = weight.rho * f
    phi = frac_derivative(target, alpha, "left")
    mask = _interior_mask(f, Side.LEFT)
    scale = weighted_norm(target, mask)
    if scale == 0.0:
        return phi, 0.0
    back = frac_integral(phi, alpha, "left")
    return phi, weighted_norm(back - target, mask) / scale
