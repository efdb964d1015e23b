"""Matrices for the fractional operators, the elliptic operator and its forms.

Unknowns are nodal values at interior points.  Three layouts are supported:

``interval``
    Uniform nodes on ``[0, L]``; the single ray coincides with the grid, so
    the ray transfer is an injection.
``box``
    Tensor grid on the rectangle.  Fractional terms act along a fan of rays
    from the base point; values move from the tensor grid to ray nodes by
    bilinear interpolation and back by the transposed (weighted) scatter.
``fan``
    Unknowns are the interior ray nodes themselves (used for the disk).
    Only the fractional operators are available there.

Every matrix acts in the inner product ``(u, v) = sum(mass * u * conj(v))``;
``OperatorMatrix`` stores the mass so adjoints and symmetric parts are
formed consistently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import EllipticityError, ValidationError
from .fracops import FractionalOrder, HolderWeight, ray_matrix
from .geometry import (
    ConvexDomain,
    GridFunction,
    RadialGrid,
    RayFan,
    build_ray_fan,
    measure_weights,
)

__all__ = [
    "Discretization",
    "EllipticCoefficients",
    "OperatorMatrix",
    "FormMatrix",
    "discretize",
    "divergence_matrix",
    "laplacian_matrix",
    "assemble_operator",
    "form_matrix",
    "green_residual",
    "OPERATOR_KINDS",
]

OPERATOR_KINDS = ("I_left", "I_right", "D_left", "D_right", "Kipriyanov", "L", "L_plus", "H")
_FRACTIONAL = ("I_left", "I_right", "D_left", "D_right", "Kipriyanov")


@dataclass(eq=False)
class Discretization:
    """Interior unknowns, their mass weights, and the transfer onto ray nodes."""

    kind: str
    domain: ConvexDomain
    fan: RayFan
    grid: RadialGrid
    coords: np.ndarray
    mass: np.ndarray
    transfer: sp.csr_matrix
    ray_weights: np.ndarray
    cells: int | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def spacing(self) -> tuple[float, ...]:
        if self.cells is None:
            raise ValidationError("fan layouts have no tensor spacing")
        return tuple(length / self.cells for length in self.domain.lengths)

    def ray_positions(self) -> np.ndarray:
        return GridFunction.zeros(self.fan, self.grid).positions()

    def to_rays(self, u) -> GridFunction:
        vals = self.transfer @ np.asarray(u)
        return GridFunction(vals.reshape(len(self.fan), self.grid.N + 1), self.fan, self.grid)

    def full_grid(self, u) -> np.ndarray:
        """Tensor-grid array including the zero boundary values."""
        if self.cells is None:
            raise ValidationError("fan layouts have no tensor grid")
        n = self.cells
        if self.dim == 1:
            out = np.zeros(n + 1, dtype=np.result_type(u, float))
            out[1:-1] = u
        else:
            out = np.zeros((n + 1, n + 1), dtype=np.result_type(u, float))
            out[1:-1, 1:-1] = np.asarray(u).reshape(n - 1, n - 1)
        return out


def _bilinear(domain: ConvexDomain, cells: int, pts: np.ndarray) -> sp.csr_matrix:
    w, h = domain.lengths
    hx, hy = w / cells, h / cells
    m = cells - 1
    gx = np.clip(pts[:, 0], 0.0, w) / hx
    gy = np.clip(pts[:, 1], 0.0, h) / hy
    i0 = np.minimum(np.floor(gx).astype(int), cells - 1)
    j0 = np.minimum(np.floor(gy).astype(int), cells - 1)
    fx, fy = gx - i0, gy - j0
    rows, cols, vals = [], [], []
    for di, dj, wt in ((0, 0, (1 - fx) * (1 - fy)), (1, 0, fx * (1 - fy)),
                       (0, 1, (1 - fx) * fy), (1, 1, fx * fy)):
        ii, jj = i0 + di, j0 + dj
        ok = (ii >= 1) & (ii <= m) & (jj >= 1) & (jj <= m) & (wt != 0.0)
        q = np.nonzero(ok)[0]
        rows.append(q)
        cols.append((ii[q] - 1) * m + (jj[q] - 1))
        vals.append(wt[q])
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(pts.shape[0], m * m),
    )


def discretize(
    domain: ConvexDomain,
    cells: int,
    base=None,
    direction_count: int | None = None,
    radial_cells: int | None = None,
) -> Discretization:
    """Build the unknown layout for ``domain``.

    Parameters
    ----------
    cells : int
        Cells per side of the tensor grid (interval, box) or radial cells per
        ray (disk).
    base : array_like, optional
        Boundary point the rays start from.  Defaults: ``0`` for the
        interval, the corner ``(0, 0)`` for the box, ``(R, 0)`` for the disk.
    direction_count, radial_cells : int, optional
        Ray resolution for the box (defaults ``4 * cells`` and
        ``2 * cells``) and direction count for the disk (default 32).
    """
    cells = int(cells)
    if cells < 2:
        raise ValidationError("need at least two cells")
    if domain.kind == "interval":
        length = domain.lengths[0]
        p = np.array([0.0]) if base is None else np.asarray(base, float).reshape(1)
        fan = build_ray_fan(domain, p, 1)
        grid = RadialGrid.uniform(cells)
        h = length / cells
        coords = (np.arange(1, cells) * h)[:, None]
        pos = fan.base[0] + fan.directions[0, 0] * grid.scaled(length)
        idx = np.rint(pos / h).astype(int)
        rows = np.nonzero((idx >= 1) & (idx <= cells - 1))[0]
        transfer = sp.csr_matrix((np.ones(rows.size), (rows, idx[rows] - 1)), shape=(cells + 1, cells - 1))
        weights = measure_weights(fan, grid)
        return Discretization("interval", domain, fan, grid, coords, np.full(cells - 1, h), transfer, weights, cells)

    if domain.kind == "box":
        p = np.zeros(2) if base is None else np.asarray(base, float).reshape(2)
        ndir = 4 * cells if direction_count is None else int(direction_count)
        nrad = 2 * cells if radial_cells is None else int(radial_cells)
        fan = build_ray_fan(domain, p, ndir)
        grid = RadialGrid.uniform(nrad)
        w, h = domain.lengths
        hx, hy = w / cells, h / cells
        ii, jj = np.meshgrid(np.arange(1, cells), np.arange(1, cells), indexing="ij")
        coords = np.column_stack([ii.ravel() * hx, jj.ravel() * hy])
        pts = GridFunction.zeros(fan, grid).positions().reshape(-1, 2)
        transfer = _bilinear(domain, cells, pts)
        weights = measure_weights(fan, grid)
        return Discretization("box", domain, fan, grid, coords, np.full(coords.shape[0], hx * hy),
                              transfer, weights, cells)

    # disk: unknowns are interior ray nodes
    radius = domain.lengths[0]
    p = np.array([radius, 0.0]) if base is None else np.asarray(base, float).reshape(2)
    ndir = 32 if direction_count is None else int(direction_count)
    fan = build_ray_fan(domain, p, ndir)
    grid = RadialGrid.uniform(cells)
    weights = measure_weights(fan, grid)
    pts = GridFunction.zeros(fan, grid).positions()
    nr = len(fan)
    interior = np.zeros((nr, cells + 1), dtype=bool)
    interior[:, 1:-1] = True
    flat = np.flatnonzero(interior.ravel())
    transfer = sp.csr_matrix((np.ones(flat.size), (flat, np.arange(flat.size))), shape=(interior.size, flat.size))
    coords = pts[interior]
    mass = weights[interior]
    return Discretization("fan", domain, fan, grid, coords, mass, transfer, weights, None)


# ------------------------------------------------------------ coefficients

@dataclass(frozen=True, eq=False)
class EllipticCoefficients:
    """Coefficient matrix field ``a`` and fractional weight ``rho``.

    ``a(points)`` returns an array of shape ``(m, dim, dim)``, ``(m,)`` or a
    scalar (the latter two mean multiples of the identity).  ``rho(points)``
    returns positive values of shape ``(m,)``; ``rho=None`` drops the
    fractional term.  ``lam`` is the Hölder exponent of ``rho`` and ``M`` an
    optional analytic Hölder constant.
    """

    a: Callable
    rho: Callable | None = None
    lam: float = 1.0
    M: float | None = None
    monotone: bool | None = None
    description: str = ""

    @classmethod
    def constant(cls, a=1.0, rho: float | None = 1.0, lam: float = 1.0) -> "EllipticCoefficients":
        amat = np.asarray(a, dtype=float)
        rho_fn = None if rho is None else (lambda x, _r=float(rho): np.full(np.asarray(x).shape[0], _r))
        return cls(
            a=lambda x, _a=amat: _a,
            rho=rho_fn,
            lam=lam,
            M=None if rho is None else 0.0,
            monotone=None if rho is None else True,
            description=f"a={amat.tolist()}, rho={rho}",
        )

    def matrix_field(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        m, dim = pts.shape
        raw = np.asarray(self.a(pts), dtype=float)
        if raw.ndim == 0:
            return np.broadcast_to(raw * np.eye(dim), (m, dim, dim)).copy()
        if raw.shape == (m,):
            return raw[:, None, None] * np.eye(dim)
        if raw.shape == (dim, dim):
            return np.broadcast_to(raw, (m, dim, dim)).copy()
        if raw.shape == (m, dim, dim):
            return raw
        raise ValidationError(f"coefficient field has shape {raw.shape}, expected ({m}, {dim}, {dim})")

    def bounds(self, points, tol: float = 1e-12) -> tuple[float, float]:
        """Ellipticity constant ``a0`` and ``a1 = sup`` of the Frobenius norm.

        ``a0`` is the smallest eigenvalue over the sample points, i.e. the
        best constant in ``a(Q) xi . xi >= a0 |xi|**2`` for every direction.
        """
        a = self.matrix_field(points)
        if not np.all(np.isfinite(a)):
            raise ValidationError("coefficient field has non-finite values")
        scale = max(1.0, float(np.max(np.abs(a))))
        if np.max(np.abs(a - np.swapaxes(a, 1, 2))) > tol * scale:
            raise ValidationError("coefficient matrix must be symmetric")
        a0 = float(np.min(np.linalg.eigvalsh(a)))
        if not a0 > 0.0:
            raise EllipticityError(
                f"uniform ellipticity fails: a(Q) xi.xi >= a0 |xi|^2 needs a0 > 0, sampled minimum is {a0:g}"
            )
        a1 = float(np.max(np.sqrt(np.sum(a * a, axis=(1, 2)))))
        return a0, a1

    def rho_values(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if self.rho is None:
            return np.zeros(pts.shape[0])
        vals = np.broadcast_to(np.asarray(self.rho(pts), dtype=float), (pts.shape[0],)).copy()
        if not np.all(np.isfinite(vals)):
            raise ValidationError("weight has non-finite values")
        if np.any(vals <= 0.0):
            raise ValidationError("weight must be strictly positive")
        return vals

    def holder_weight(self, disc: Discretization, alpha) -> HolderWeight | None:
        if self.rho is None:
            return None
        key = ("holder", float(FractionalOrder(alpha).alpha))
        if key not in disc._cache:
            pos = disc.ray_positions()
            vals = self.rho_values(pos.reshape(-1, disc.dim)).reshape(pos.shape[:2])
            rho = GridFunction(vals, disc.fan, disc.grid)
            disc._cache[key] = HolderWeight.from_samples(rho, self.lam, alpha, M=self.M, monotone=self.monotone)
        return disc._cache[key]


# ------------------------------------------------------------- operators

@dataclass(eq=False)
class OperatorMatrix:
    """Square matrix acting on interior unknowns in the mass inner product."""

    kind: str
    entries: np.ndarray
    mass: np.ndarray
    disc: Discretization | None = None

    def __post_init__(self):
        a = self.entries
        a = a.tocsr() if sp.issparse(a) else np.asarray(a)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError("operator matrix must be square")
        if self.mass.shape != (a.shape[0],):
            raise ValidationError("mass weights do not match the matrix size")
        self.entries = a

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def apply(self, u) -> np.ndarray:
        return self.entries @ np.asarray(u)

    def inner(self, u, v) -> complex:
        return complex(np.sum(self.mass * np.asarray(u) * np.conj(v)))

    def dense(self) -> np.ndarray:
        return self.entries.toarray() if sp.issparse(self.entries) else self.entries

    def adjoint_entries(self) -> np.ndarray:
        """Matrix of the adjoint with respect to the mass inner product."""
        return (self.dense().conj().T * self.mass[None, :]) / self.mass[:, None]

    def hermitian_defect(self) -> float:
        """``||A - A*|| / ||A||`` in the mass-similarity (Frobenius) norm."""
        s = np.sqrt(self.mass)
        sym = self.dense() * s[:, None] / s[None, :]
        norm = np.linalg.norm(sym)
        return 0.0 if norm == 0.0 else float(np.linalg.norm(sym - sym.conj().T) / norm)

    def parts(self) -> tuple[np.ndarray, np.ndarray]:
        """Hermitian and skew-Hermitian parts (both in the mass inner product)."""
        adj = self.adjoint_entries()
        return 0.5 * (self.dense() + adj), 0.5 * (self.dense() - adj)


@dataclass(eq=False)
class FormMatrix:
    """Matrix of a sesquilinear form: ``t[u, v] = conj(v) @ entries @ u``."""

    which: str
    entries: np.ndarray
    disc: Discretization

    def __call__(self, u, v=None):
        v = u if v is None else v
        return complex(np.conj(np.asarray(v)) @ (self.entries @ np.asarray(u)))


def _ray_blocks(disc: Discretization, kind: str, alpha: float) -> sp.csr_matrix:
    key = ("blocks", kind, alpha)
    if key not in disc._cache:
        n = disc.dim
        blocks = [ray_matrix(kind, disc.grid.nodes, d, alpha, n) for d in disc.fan.lengths]
        disc._cache[key] = sp.block_diag(blocks, format="csr")
    return disc._cache[key]


def _galerkin(disc: Discretization, kind: str, alpha: float, rho_left=None, rho_right=None) -> np.ndarray:
    """``M^-1 B^T W diag(rho_left) Op diag(rho_right) B`` as a dense matrix."""
    op = _ray_blocks(disc, kind, alpha)
    w = disc.ray_weights.ravel()
    if rho_left is not None:
        w = w * rho_left
    right = disc.transfer
    if rho_right is not None:
        right = sp.diags(rho_right) @ right
    full = disc.transfer.T @ (sp.diags(w) @ (op @ right))
    dense = full.toarray() if sp.issparse(full) else np.asarray(full)
    return dense / disc.mass[:, None]


def _edge_values(coeffs: EllipticCoefficients, pts: np.ndarray, i: int, j: int) -> np.ndarray:
    return coeffs.matrix_field(pts)[:, i, j]


def divergence_matrix(coeffs: EllipticCoefficients, disc: Discretization) -> sp.csr_matrix:
    """Conservative finite differences for ``-div(a grad u)`` with Dirichlet elimination."""
    if disc.cells is None:
        raise ValidationError("the divergence term needs a tensor grid (interval or box)")
    key = ("div", coeffs)
    if key in disc._cache:
        return disc._cache[key]
    n = disc.cells
    if disc.dim == 1:
        h = disc.spacing[0]
        mid = ((np.arange(n) + 0.5) * h)[:, None]
        am = _edge_values(coeffs, mid, 0, 0)
        main = (am[:-1] + am[1:]) / h**2
        off = -am[1:-1] / h**2
        mat = sp.diags([off, main, off], [-1, 0, 1], format="csr")
        disc._cache[key] = mat
        return mat

    hx, hy = disc.spacing
    m = n - 1
    ii, jj = np.meshgrid(np.arange(1, n), np.arange(1, n), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()

    def at(di, dj, comp):
        pts = np.column_stack([(ii + di) * hx, (jj + dj) * hy])
        return _edge_values(coeffs, pts, *comp)

    ae, aw = at(0.5, 0.0, (0, 0)), at(-0.5, 0.0, (0, 0))
    an, as_ = at(0.0, 0.5, (1, 1)), at(0.0, -0.5, (1, 1))
    entries = {
        (0, 0): (ae + aw) / hx**2 + (an + as_) / hy**2,
        (1, 0): -ae / hx**2,
        (-1, 0): -aw / hx**2,
        (0, 1): -an / hy**2,
        (0, -1): -as_ / hy**2,
    }
    mixed_scale = 1.0 / (4.0 * hx * hy)
    b_e, b_w = at(1, 0, (0, 1)), at(-1, 0, (0, 1))
    b_n, b_s = at(0, 1, (0, 1)), at(0, -1, (0, 1))
    if np.any(b_e) or np.any(b_w) or np.any(b_n) or np.any(b_s):
        entries[(1, 1)] = -(b_e + b_n) * mixed_scale
        entries[(1, -1)] = (b_e + b_s) * mixed_scale
        entries[(-1, 1)] = (b_w + b_n) * mixed_scale
        entries[(-1, -1)] = -(b_w + b_s) * mixed_scale
    rows, cols, vals = [], [], []
    for (di, dj), v in entries.items():
        ti, tj = ii + di, jj + dj
        ok = (ti >= 1) & (ti <= m) & (tj >= 1) & (tj <= m)
        rows.append(((ii - 1) * m + (jj - 1))[ok])
        cols.append(((ti - 1) * m + (tj - 1))[ok])
        vals.append(v[ok])
    mat = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(m * m, m * m))
    disc._cache[key] = mat
    return mat


def laplacian_matrix(disc: Discretization) -> sp.csr_matrix:
    """Dirichlet ``-Laplace`` on the same grid (unit coefficient)."""
    key = ("laplacian",)
    if key not in disc._cache:
        disc._cache[key] = divergence_matrix(EllipticCoefficients.constant(1.0, None), disc)
    return disc._cache[key]


def assemble_operator(kind: str, coeffs: EllipticCoefficients | None, disc: Discretization, alpha) -> OperatorMatrix:
    """Assemble one of :data:`OPERATOR_KINDS` on ``disc``.

    The fractional kinds are the bare ray operators moved to the unknowns.
    ``L`` is ``-div(a grad u) + rho * Kipriyanov(u)``, ``L_plus`` is
    ``-div(a grad u) + D_right(rho u)`` and ``H`` is the mass-weighted
    symmetric part of ``L``.
    """
    if kind not in OPERATOR_KINDS:
        raise ValidationError(f"unknown operator kind {kind!r}; expected one of {OPERATOR_KINDS}")
    a = FractionalOrder(alpha).alpha
    if kind in _FRACTIONAL:
        return OperatorMatrix(kind, _galerkin(disc, kind, a), disc.mass, disc)
    if coeffs is None:
        raise ValidationError(f"operator {kind} needs coefficients")
    coeffs.bounds(disc.coords)
    div = divergence_matrix(coeffs, disc).toarray()
    if coeffs.rho is None:
        frac = 0.0
    else:
        coeffs.holder_weight(disc, a)
        pos = disc.ray_positions().reshape(-1, disc.dim)
        rho = coeffs.rho_values(pos)
        if kind == "L_plus":
            frac = _galerkin(disc, "D_right", a, rho_right=rho)
        else:
            frac = _galerkin(disc, "Kipriyanov", a, rho_left=rho)
    mat = div + frac
    if kind == "H":
        op = OperatorMatrix("L", mat, disc.mass, disc)
        return OperatorMatrix("H", op.parts()[0], disc.mass, disc)
    return OperatorMatrix(kind, mat, disc.mass, disc)


def _corner_gradients(disc: Discretization):
    """Per-cell gradient operators evaluated at each cell corner (full grid)."""
    n = disc.cells
    if disc.dim == 1:
        h = disc.spacing[0]
        gx = sp.diags([-np.ones(n), np.ones(n)], [0, 1], shape=(n, n + 1)) / h
        return [(gx,)], h
    hx, hy = disc.spacing
    npts = n + 1

    def node(i, j):
        return i * npts + j

    ci, cj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    ci, cj = ci.ravel(), cj.ravel()
    cell = np.arange(ci.size)

    def diff(a_nodes, b_nodes, step):
        rows = np.concatenate([cell, cell])
        cols = np.concatenate([b_nodes, a_nodes])
        vals = np.concatenate([np.ones(cell.size), -np.ones(cell.size)]) / step
        return sp.csr_matrix((vals, (rows, cols)), shape=(cell.size, npts * npts))

    out = []
    for sx in (0, 1):
        for sy in (0, 1):
            gx = diff(node(ci, cj + sy), node(ci + 1, cj + sy), hx)
            gy = diff(node(ci + sx, cj), node(ci + sx, cj + 1), hy)
            out.append((gx, gy))
    return out, hx * hy / 4.0


def _interior_selector(disc: Discretization) -> sp.csr_matrix:
    n = disc.cells
    if disc.dim == 1:
        idx = np.arange(1, n)
        total = n + 1
    else:
        ii, jj = np.meshgrid(np.arange(1, n), np.arange(1, n), indexing="ij")
        idx = (ii * (n + 1) + jj).ravel()
        total = (n + 1) ** 2
    return sp.csr_matrix((np.ones(idx.size), (idx, np.arange(idx.size))), shape=(total, idx.size))


def form_matrix(coeffs: EllipticCoefficients, disc: Discretization, alpha, which: str = "t") -> FormMatrix:
    """Matrix of ``t[u, v] = (a grad u, grad v) + (rho D u, v)`` or ``h = Re t``.

    Gradients are one-sided differences taken at the four corners of each
    cell (the cell's single difference in 1D), each weighted by a quarter of
    the cell area with ``a`` frozen at the cell centre.
    """
    if which not in ("t", "h"):
        raise ValidationError("which must be 't' or 'h'")
    if disc.cells is None:
        raise ValidationError("forms need a tensor grid (interval or box)")
    a_ = FractionalOrder(alpha).alpha
    coeffs.bounds(disc.coords)
    grads, weight = _corner_gradients(disc)
    n = disc.cells
    h = disc.spacing
    if disc.dim == 1:
        centers = ((np.arange(n) + 0.5) * h[0])[:, None]
    else:
        ci, cj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        centers = np.column_stack([(ci.ravel() + 0.5) * h[0], (cj.ravel() + 0.5) * h[1]])
    amat = coeffs.matrix_field(centers)
    stiff = None
    for g in grads:
        for p in range(disc.dim):
            for q in range(disc.dim):
                term = g[q].T @ sp.diags(amat[:, q, p]) @ g[p]
                stiff = term if stiff is None else stiff + term
    sel = _interior_selector(disc)
    stiff = (sel.T @ (weight * stiff) @ sel).toarray()
    if coeffs.rho is not None:
        pos = disc.ray_positions().reshape(-1, disc.dim)
        frac = _galerkin(disc, "Kipriyanov", a_, rho_left=coeffs.rho_values(pos)) * disc.mass[:, None]
        stiff = stiff + frac
    if which == "h":
        stiff = 0.5 * (stiff + stiff.conj().T)
    return FormMatrix(which, stiff, disc)


def green_residual(u, v, coeffs: EllipticCoefficients, disc: Discretization) -> float:
    """``|(-div(a grad u), v) - (a grad u, grad v)|`` for interior vectors ``u, v``.

    The left side uses the finite-difference operator and the mass; the right
    side differentiates nodal values with second-order differences and
    integrates with the trapezoid rule.
    """
    u = np.asarray(u)
    v = np.asarray(v)
    lhs = np.sum(disc.mass * (divergence_matrix(coeffs, disc) @ u) * np.conj(v))
    uf, vf = disc.full_grid(u), disc.full_grid(v)
    h = disc.spacing
    n = disc.cells
    if disc.dim == 1:
        x = (np.arange(n + 1) * h[0])[:, None]
        a = coeffs.matrix_field(x)[:, 0, 0]
        du = np.gradient(uf, h[0], edge_order=2)
        dv = np.gradient(vf, h[0], edge_order=2)
        rhs = np.trapezoid(a * du * np.conj(dv), dx=h[0])
    else:
        xs = np.arange(n + 1) * h[0]
        ys = np.arange(n + 1) * h[1]
        xx, yy = np.meshgrid(xs, ys, indexing="ij")
        a = coeffs.matrix_field(np.column_stack([xx.ravel(), yy.ravel()])).reshape(n + 1, n + 1, 2, 2)
        gu = np.gradient(uf, h[0], h[1], edge_order=2)
        gv = np.gradient(vf, h[0], h[1], edge_order=2)
        dens = sum(a[..., p, q] * gu[q] * np.conj(gv[p]) for p in range(2) for q in range(2))
        rhs = np.trapezoid(np.trapezoid(dens, dx=h[1], axis=1), dx=h[0])
    return float(abs(lhs - rhs))
