"""Accretivity constants, numerical ranges, sectors and eigenvalue bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (
    Discretization,
    EllipticCoefficients,
    OperatorMatrix,
    assemble_operator,
    laplacian_matrix,
)
from .errors import OrderingError, ValidationError
from .fracops import FractionalOrder, HolderWeight, cn_alpha
from .quadrature import gamma_fn

__all__ = [
    "AccretivityReport",
    "RayleighResult",
    "SectorEstimate",
    "AnalyticSector",
    "NuParams",
    "SandwichReport",
    "ComparisonOperators",
    "accretivity_constants",
    "trial_fields",
    "rayleigh_split",
    "empirical_rayleigh",
    "numerical_range_sample",
    "sector_fit",
    "sector_exact",
    "sector_params_analytic",
    "eigen_solve",
    "comparison_operators",
    "sandwich_check",
    "resolvent_check",
]

DENSE_LIMIT = 1500


# ------------------------------------------------------------ accretivity

@dataclass(frozen=True)
class AccretivityReport:
    mu: float
    mu1: float | None
    a0: float | None
    inf_rho: float
    M: float
    lam: float
    monotone_branch: bool
    M_is_analytic: bool
    empirical_min: float | None = None
    trials: int = 0
    gamma_positive: bool | None = None

    def with_empirical(self, value: float, trials: int) -> "AccretivityReport":
        return AccretivityReport(**{**self.__dict__, "empirical_min": value, "trials": trials})

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def accretivity_constants(alpha, n: int, diameter: float, weight: HolderWeight, a0: float | None = None,
                          monotone: bool | None = None) -> AccretivityReport:
    """Strict-accretivity constant ``mu`` and the shifted constant ``mu1``.

    ``mu = d**-a/2 * (1/G(1-a) + C_n) - a M d**(lam-a) / (2 G(1-a)(lam-a) inf rho)``;
    the second term is dropped for weights that do not increase along rays.
    ``mu1 = a0 + mu * inf rho`` when the ellipticity constant is given.
    """
    a = FractionalOrder(alpha).alpha
    lam = float(weight.lam)
    if not (a < lam <= 1.0):
        raise ValidationError(f"Hölder exponent must satisfy alpha < lambda <= 1, got lambda={lam}, alpha={a}")
    if not diameter > 0.0:
        raise ValidationError("diameter must be positive")
    if weight.inf_rho <= 0.0:
        raise ValidationError("weight must be strictly positive")
    mono = weight.monotone if monotone is None else bool(monotone)
    g1 = gamma_fn(1.0 - a)
    mu = 0.5 * diameter ** (-a) * (1.0 / g1 + cn_alpha(n, a))
    if not mono:
        mu -= a * weight.M * diameter ** (lam - a) / (2.0 * g1 * (lam - a) * weight.inf_rho)
    mu1 = None if a0 is None else a0 + mu * weight.inf_rho
    return AccretivityReport(
        mu=mu, mu1=mu1, a0=a0, inf_rho=weight.inf_rho, M=weight.M, lam=lam,
        monotone_branch=mono, M_is_analytic=weight.M_is_analytic,
    )


def _boundary_factor(disc: Discretization, x: np.ndarray) -> np.ndarray:
    dom = disc.domain
    if dom.kind == "interval":
        length = dom.lengths[0]
        return x[:, 0] * (length - x[:, 0]) * 4.0 / length**2
    if dom.kind == "box":
        w, h = dom.lengths
        return 16.0 * x[:, 0] * (w - x[:, 0]) * x[:, 1] * (h - x[:, 1]) / (w * h) ** 2
    r2 = dom.lengths[0] ** 2
    return np.clip(r2 - np.sum(x * x, axis=1), 0.0, None) / r2


def trial_fields(disc: Discretization, count: int, rng: np.random.Generator, complex_fields: bool = True) -> np.ndarray:
    """Boundary-vanishing trial vectors on the unknowns, shape ``(count, m)``.

    Cycles through Gaussian bumps, low-frequency sines, and random
    band-limited fields, each multiplied by a smooth factor that vanishes on
    the boundary.  With ``complex_fields`` every second field gets an
    independent imaginary part.
    """
    x = disc.coords
    dim = disc.dim
    lo = np.zeros(dim)
    if disc.domain.kind == "disk":
        lo = -np.full(dim, disc.domain.lengths[0])
        span = np.full(dim, 2.0 * disc.domain.lengths[0])
    else:
        span = np.asarray(disc.domain.lengths)
    bfac = _boundary_factor(disc, x)
    y = (x - lo) / span

    def real_field(kind: int) -> np.ndarray:
        if kind == 0:
            center = rng.uniform(0.15, 0.85, dim)
            width = rng.uniform(0.05, 0.3)
            return np.exp(-np.sum((y - center) ** 2, axis=1) / (2.0 * width**2)) * bfac
        if kind == 1:
            freq = rng.integers(1, 5, dim)
            return np.prod(np.sin(np.pi * freq * y), axis=1) * (1.0 if disc.domain.kind != "disk" else bfac)
        out = np.zeros(x.shape[0])
        for _ in range(6):
            k = rng.integers(0, 7, dim)
            out += rng.standard_normal() * np.cos(np.pi * (y @ k) + rng.uniform(0, 2 * np.pi))
        return out * bfac

    fields = np.zeros((count, x.shape[0]), dtype=complex if complex_fields else float)
    for c in range(count):
        kind = c % 3
        f = real_field(kind)
        if complex_fields and c % 2 == 1:
            f = f + 1j * real_field((kind + 1) % 3)
        fields[c] = f
    return fields


@dataclass(frozen=True)
class RayleighResult:
    minimum: float
    quotients: np.ndarray
    trials: int
    skipped: int


def _matvec(mat, f):
    """``mat @ f`` without promoting a real matrix to complex."""
    if np.iscomplexobj(f) and not np.iscomplexobj(mat):
        return mat @ np.ascontiguousarray(f.real) + 1j * (mat @ np.ascontiguousarray(f.imag))
    return mat @ np.ascontiguousarray(f)


def _weighted_quotient(mat, mass, f) -> tuple[complex, float]:
    num = np.sum(mass * _matvec(mat, f) * np.conj(f))
    den = float(np.sum(mass * np.abs(f) ** 2))
    return num, den


def rayleigh_split(op: OperatorMatrix, f, rho=None) -> dict:
    """Real-part quotient of ``f = u + i v`` and of its real and imaginary parts.

    For a real operator ``Re(Af, f) = (Au, u) + (Av, v)``, so
    ``q(f) = w_u q(u) + w_v q(v)`` with ``w_u = |u|^2/|f|^2``.
    """
    mass = op.mass if rho is None else op.mass * rho
    f = np.asarray(f, dtype=complex)
    u, v = f.real, f.imag
    nf, df = _weighted_quotient(op.entries, mass, f)
    out = {"q": nf.real / df, "w_u": 0.0, "w_v": 0.0, "q_u": 0.0, "q_v": 0.0}
    for part, name in ((u, "u"), (v, "v")):
        n_, d_ = _weighted_quotient(op.entries, mass, part)
        if d_ > 0.0:
            out[f"q_{name}"] = n_.real / d_
            out[f"w_{name}"] = d_ / df
    return out


def empirical_rayleigh(op: OperatorMatrix, rho=None, trials: int = 200, seed: int = 0,
                       fields: np.ndarray | None = None) -> RayleighResult:
    """Minimum of ``Re(rho A f, f) / (rho f, f)`` over seeded trial fields."""
    if op.disc is None and fields is None:
        raise ValidationError("trial fields need a discretization")
    if fields is None:
        fields = trial_fields(op.disc, trials, np.random.default_rng(seed))
    mass = op.mass if rho is None else op.mass * np.asarray(rho)
    fields = np.atleast_2d(fields)
    af = _matvec(op.entries, fields.T).T
    num = np.sum(mass * af * np.conj(fields), axis=1).real
    den = np.sum(mass * np.abs(fields) ** 2, axis=1)
    keep = den > 0.0
    skipped = int(np.count_nonzero(~keep))
    q = num[keep] / den[keep]
    return RayleighResult(float(q.min()) if q.size else math.nan, q, len(fields), skipped)


# ----------------------------------------------------------------- ranges

def _similar(op: OperatorMatrix) -> np.ndarray:
    s = np.sqrt(op.mass)
    return op.dense() * s[:, None] / s[None, :]


def _lowest_pairs(herm, k: int, tol: float = 1e-12, certify: bool = True):
    """Smallest ``k`` eigenpairs of a large Hermitian matrix.

    Shift-invert Lanczos about zero finds the eigenvalues nearest zero; a
    Cholesky factorization of ``herm - (lambda_1 - delta) I`` then certifies
    that nothing lies below them.  A dense solve is the fallback.
    """
    size = herm.shape[0]
    dense = herm.toarray() if sp.issparse(herm) else np.asarray(herm)
    try:
        if sp.issparse(herm):
            lu = spla.splu(sp.csc_matrix(herm))
            solve = lu.solve
        else:
            factor = sla.lu_factor(dense)
            solve = lambda b: sla.lu_solve(factor, b)  # noqa: E731
        opinv = spla.LinearOperator(herm.shape, matvec=solve, dtype=dense.dtype)
        vals, vecs = spla.eigsh(herm, k=k, sigma=0.0, which="LM", OPinv=opinv, tol=tol)
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        if not certify:
            return vals, vecs
        scale = max(1.0, float(np.max(np.abs(vals))))
        sla.cholesky(dense - (vals[0] - 1e-9 * scale) * np.eye(size), lower=True, check_finite=False)
        return vals, vecs
    except (sla.LinAlgError, RuntimeError, spla.ArpackError):
        return sla.eigh(0.5 * (dense + dense.conj().T), subset_by_index=[0, k - 1])


def _extreme_vectors(herm: np.ndarray, count: int) -> np.ndarray:
    m = herm.shape[0]
    count = min(count, m // 2)
    if count == 0:
        return np.zeros((0, m))
    if m <= DENSE_LIMIT:
        _, vecs = sla.eigh(herm)
        return np.vstack([vecs[:, :count].T, vecs[:, -count:].T])
    # probes only need to be close to extremal, so loose tolerances suffice
    hi = spla.eigsh(herm, k=count, which="LA", tol=1e-4, maxiter=20 * m)[1]
    if np.iscomplexobj(herm) and not np.any(herm.real):
        # purely imaginary Hermitian: the spectrum is symmetric and conj maps the ends
        lo = hi.conj()
    else:
        lo = _lowest_pairs(herm, count, tol=1e-4, certify=False)[1]
    return np.vstack([lo.T, hi.T])


def numerical_range_sample(op: OperatorMatrix, count: int = 500, seed: int = 0, extremes: int = 4) -> np.ndarray:
    """Rayleigh quotients ``(Au, u)/(u, u)`` in the mass inner product.

    Probes are extreme eigenvectors of the Hermitian and skew parts,
    coordinate vectors, smooth boundary-vanishing trial fields and random
    complex vectors, in that order, truncated to ``count``.
    """
    if count < 1:
        raise ValidationError("sample count must be at least 1")
    rng = np.random.default_rng(seed)
    sim = _similar(op)
    m = sim.shape[0]
    herm = 0.5 * (sim + sim.conj().T)
    skew_h = (sim - sim.conj().T) / 2j
    probes = [_extreme_vectors(herm, extremes)]
    if np.max(np.abs(skew_h)) > 0.0:
        probes.append(_extreme_vectors(skew_h, extremes))
    coord_idx = rng.choice(m, size=min(m, max(1, count // 10)), replace=False)
    probes.append(np.eye(m)[coord_idx])
    if op.disc is not None:
        sm = trial_fields(op.disc, max(1, count // 4), rng) * np.sqrt(op.mass)[None, :]
        probes.append(sm)
    rest = count - sum(p.shape[0] for p in probes)
    if rest > 0:
        probes.append(rng.standard_normal((rest, m)) + 1j * rng.standard_normal((rest, m)))
    vecs = np.vstack(probes)[:count]
    av = _matvec(sim, vecs.T).T
    num = np.sum(av * np.conj(vecs), axis=1)
    den = np.sum(np.abs(vecs) ** 2, axis=1)
    return num / den


@dataclass(frozen=True)
class SectorEstimate:
    """Sector ``|arg(z - gamma)| <= theta`` containing a point set."""

    gamma: float
    theta: float
    k: float
    boundary: bool = False
    count: int = 0

    def contains(self, points, slack: float = 1e-12) -> np.ndarray:
        z = np.asarray(points, dtype=complex)
        if self.theta >= 0.5 * math.pi:
            return z.real >= self.gamma - slack
        return np.abs(z.imag) <= (z.real - self.gamma) * math.tan(self.theta) + slack

    def as_dict(self) -> dict:
        return {"gamma": self.gamma, "theta": self.theta, "k": self.k if math.isfinite(self.k) else None,
                "boundary": self.boundary, "count": self.count}


def _clean(points) -> np.ndarray:
    z = np.asarray(points, dtype=complex).ravel()
    if z.size == 0:
        raise ValidationError("cannot fit a sector to an empty point set")
    if not np.all(np.isfinite(z)):
        raise ValidationError("points must be finite")
    scale = float(np.max(np.abs(z)))
    im = np.where(np.abs(z.imag) <= 1e-12 * scale, 0.0, z.imag)
    return z.real + 1j * im


def _max_angle(z: np.ndarray, gamma: float) -> float:
    ang = np.arctan2(np.abs(z.imag), z.real - gamma)
    ang[(z.real == gamma) & (z.imag == 0.0)] = 0.0
    return float(np.max(ang))


def sector_fit(points, vertex: float | None = None, slope: float = 1.0) -> SectorEstimate:
    """Tightest sector with vertex on the real axis containing ``points``.

    With ``vertex=None`` the vertex is the largest ``gamma`` such that all
    points satisfy ``|Im z| <= (Re z - gamma)/slope``; the reported angle is
    then the smallest one that still contains every point.  With a fixed
    vertex only the angle is fitted; points left of the vertex force
    ``gamma = min Re z`` and ``theta = pi/2`` (``boundary=True``).
    """
    z = _clean(points)
    if vertex is None:
        if not slope > 0.0:
            raise ValidationError("slope must be positive")
        gamma = float(np.min(z.real - slope * np.abs(z.imag)))
        boundary = False
    else:
        gamma = float(vertex)
        left = (z.real < gamma) | ((z.real == gamma) & (z.imag != 0.0))
        boundary = bool(np.any(left))
        if boundary:
            gamma = float(np.min(z.real))
            return SectorEstimate(gamma, 0.5 * math.pi, 0.0, True, z.size)
    theta = _max_angle(z, gamma)
    k = math.inf if theta == 0.0 else 1.0 / math.tan(theta)
    return SectorEstimate(gamma, theta, k, boundary, z.size)


def sector_exact(op: OperatorMatrix, slope: float = 1.0) -> float:
    """Largest ``gamma`` with ``Re z - slope |Im z| >= gamma`` on the whole numerical range."""
    sim = _similar(op)
    herm = 0.5 * (sim + sim.conj().T)
    skew_h = (sim - sim.conj().T) / 2j
    best = math.inf
    for sign in (1.0, -1.0):
        mat = herm - sign * slope * skew_h
        if mat.shape[0] <= DENSE_LIMIT:
            val = sla.eigh(mat, eigvals_only=True, subset_by_index=[0, 0])[0]
        else:
            val = _lowest_pairs(mat, 1, tol=1e-10)[0][0]
        best = min(best, float(val))
    return best


@dataclass(frozen=True)
class NuParams:
    """Embedding exponents; ``nu = (n/l)(1/p - 1/q) + (alpha + beta)/l``."""

    n: int
    l: int
    p: float
    q: float
    beta: float
    alpha: float

    def __post_init__(self):
        if self.l < 1 or self.n < 1:
            raise ValidationError("l and n must be positive integers")
        if self.l * self.p > self.n:
            raise ValidationError(f"need l*p <= n, got l*p = {self.l * self.p}")
        if not self.q > self.p:
            raise ValidationError("need q > p")
        upper = self.l - self.n / self.p + self.n / self.q
        if not (0.0 < self.alpha < upper):
            raise ValidationError(f"need 0 < alpha < l - n/p + n/q = {upper:g}, got alpha = {self.alpha}")
        if not self.beta > 0.0:
            raise ValidationError("beta must be positive")

    @property
    def nu(self) -> float:
        return (self.n / self.l) * (1.0 / self.p - 1.0 / self.q) + (self.alpha + self.beta) / self.l


@dataclass(frozen=True)
class AnalyticSector:
    k: float
    gamma: float
    theta: float
    feasible: bool
    nu: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def sector_params_analytic(a0: float, a1: float, C2: float, C3: float, eps: float, delta: float,
                           nu: NuParams, mu: float, inf_rho: float) -> AnalyticSector:
    """Vertex and slope from user-supplied embedding constants.

    ``k = a0 / (eps delta**(2-2 nu) C3 + a1)``,
    ``gamma = mu inf_rho - k (eps delta**(-2 nu) C2 + 1/eps)``,
    ``theta = arctan(1/k)``; ``feasible`` is ``gamma > 0``.
    """
    if not (eps > 0.0 and delta > 0.0):
        raise ValidationError("eps and delta must be positive")
    if C2 < 0.0 or C3 < 0.0:
        raise ValidationError("embedding constants must be nonnegative")
    if not (a0 > 0.0 and a1 >= a0):
        raise ValidationError("need 0 < a0 <= a1")
    v = nu.nu
    k = a0 / (eps * delta ** (2.0 - 2.0 * v) * C3 + a1)
    gamma = mu * inf_rho - k * (eps * delta ** (-2.0 * v) * C2 + 1.0 / eps)
    return AnalyticSector(k=k, gamma=gamma, theta=math.atan(1.0 / k), feasible=gamma > 0.0, nu=v)


# -------------------------------------------------------------- eigenvalues

def _symmetrized(a, mass):
    if mass is None:
        return a
    s = np.sqrt(np.asarray(mass, dtype=float))
    if sp.issparse(a):
        return sp.diags(s) @ a @ sp.diags(1.0 / s)
    return a * s[:, None] / s[None, :]


def eigen_solve(a, m: int, mass=None, return_vectors: bool = False, tol: float = 1e-10):
    """Smallest ``m`` eigenvalues of an operator self-adjoint in the mass inner product.

    ``a`` may be an :class:`OperatorMatrix` (its mass is used), a dense array
    or a sparse matrix.  Small problems use a dense solver; larger ones
    shift-invert Lanczos about zero.  Each pair is checked for
    ``||S v - lambda v|| <= 1e-8 ||S||``.
    """
    if isinstance(a, OperatorMatrix):
        mass = a.mass
        a = a.entries
    s = _symmetrized(a, mass)
    size = s.shape[0]
    if not 1 <= m <= size:
        raise ValidationError(f"requested {m} eigenvalues of a {size}x{size} matrix")
    if sp.issparse(s):
        diff = spla.norm(s - s.conj().T)
        norm = spla.norm(s)
    else:
        diff = np.linalg.norm(s - s.conj().T)
        norm = np.linalg.norm(s)
    if norm > 0.0 and diff > tol * norm:
        raise ValidationError(f"matrix is not self-adjoint in the mass inner product (defect {diff / norm:.2e})")

    if size <= DENSE_LIMIT:
        dense = s.toarray() if sp.issparse(s) else np.asarray(s)
        dense = 0.5 * (dense + dense.conj().T)
        vals, vecs = sla.eigh(dense, subset_by_index=[0, m - 1])
        op_norm = float(np.max(np.abs(sla.eigvalsh(dense, subset_by_index=[size - 1, size - 1]))))
        op_norm = max(op_norm, float(np.max(np.abs(vals))))
        apply = lambda v: dense @ v  # noqa: E731
    else:
        herm = 0.5 * (s + s.conj().T)
        if sp.issparse(herm):
            herm = herm.tocsc()
        apply = lambda v: herm @ v  # noqa: E731
        vals, vecs = _lowest_pairs(herm, m)
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        top = spla.eigsh(herm, k=1, which="LM", return_eigenvectors=False, tol=1e-3)
        op_norm = max(float(np.max(np.abs(top))), float(np.max(np.abs(vals))))
    resid = np.linalg.norm(apply(vecs) - vecs * vals[None, :], axis=0)
    if np.any(resid > 1e-8 * op_norm):
        raise ValidationError(f"eigenpair residual {resid.max():.2e} exceeds 1e-8 * ||A||")
    if not return_vectors:
        return vals
    if mass is not None:
        vecs = vecs / np.sqrt(np.asarray(mass))[:, None]
    return vals, vecs


# --------------------------------------------------------------- sandwich

@dataclass(eq=False)
class ComparisonOperators:
    a0: float
    rho0: float
    a1: float
    rho1: float
    rho1_raw: float
    L0: OperatorMatrix
    L1: OperatorMatrix
    max_violation: float = 0.0

    def params(self) -> dict:
        return {"a0": self.a0, "rho0": self.rho0, "a1": self.a1, "rho1": self.rho1, "rho1_raw": self.rho1_raw}


def _constant_operator(disc: Discretization, a: float, rho: float, kind: str) -> OperatorMatrix:
    lap = laplacian_matrix(disc)
    mat = (a * lap + rho * sp.identity(lap.shape[0], format="csr")).tocsr()
    return OperatorMatrix(kind, mat, disc.mass, disc)


def _max_eig(sym: np.ndarray) -> float:
    if sym.shape[0] <= DENSE_LIMIT:
        return float(sla.eigh(sym, eigvals_only=True, subset_by_index=[sym.shape[0] - 1] * 2)[0])
    return float(spla.eigsh(sym, k=1, which="LA", return_eigenvectors=False, tol=1e-6)[0])


def comparison_operators(coeffs: EllipticCoefficients, disc: Discretization, alpha, mu: float,
                         H: OperatorMatrix | None = None, validation: int = 50, seed: int = 0,
                         inflate: float = 0.1) -> ComparisonOperators:
    """Constant-coefficient operators ``L_k = -a_k Laplace + rho_k`` bracketing ``H``.

    ``a0`` is the ellipticity constant and ``rho0 = mu inf rho``.  ``a1`` is
    the supremum of the Frobenius norm of ``a`` and ``rho1`` the largest
    eigenvalue of ``H - a1 (-Laplace)`` in the mass inner product (the exact
    maximum of the generalized Rayleigh quotient on this grid), increased by
    ``inflate`` times its magnitude.  The form ordering is then verified on
    ``validation`` random boundary-vanishing fields.
    """
    a = FractionalOrder(alpha).alpha
    a0, a1 = coeffs.bounds(disc.coords)
    weight = coeffs.holder_weight(disc, a)
    rho0 = 0.0 if weight is None else mu * weight.inf_rho
    if H is None:
        H = assemble_operator("H", coeffs, disc, a)
    lap = laplacian_matrix(disc)
    s = np.sqrt(disc.mass)
    sym = (H.entries - a1 * lap.toarray()) * s[:, None] / s[None, :]
    sym = 0.5 * (sym + sym.T)
    raw = _max_eig(sym)
    scale = max(1.0, float(np.max(np.abs(np.diag(H.entries))))) * 1e-10
    if abs(raw) <= scale:
        raw = 0.0
    rho1 = raw + inflate * abs(raw)
    L0 = _constant_operator(disc, a0, rho0, "L0")
    L1 = _constant_operator(disc, a1, rho1, "L1")
    comp = ComparisonOperators(a0, rho0, a1, rho1, raw, L0, L1)

    rng = np.random.default_rng(seed)
    fields = trial_fields(disc, validation, rng, complex_fields=False)
    worst = 0.0
    for f in fields:
        q0 = float(np.sum(disc.mass * (L0.entries @ f) * f))
        qh = float(np.sum(disc.mass * (H.entries @ f) * f))
        q1 = float(np.sum(disc.mass * (L1.entries @ f) * f))
        tol = 1e-10 * max(abs(q0), abs(qh), abs(q1))
        worst = max(worst, q0 - qh, qh - q1)
        if q0 > qh + tol:
            raise OrderingError(f"lower form ordering fails: L0[f]={q0:.6g} > H[f]={qh:.6g}", field=f)
        if qh > q1 + tol:
            raise OrderingError(f"upper form ordering fails: H[f]={qh:.6g} > L1[f]={q1:.6g}", field=f)
    comp.max_violation = worst
    return comp


@dataclass(frozen=True)
class SandwichReport:
    lambda_L0: np.ndarray
    lambda_H: np.ndarray
    lambda_L1: np.ndarray
    passed: np.ndarray
    ok: bool
    first_failure: int | None
    rtol: float
    params: dict = field(default_factory=dict)

    def rows(self):
        for i in range(self.lambda_H.size):
            yield i + 1, self.lambda_L0[i], self.lambda_H[i], self.lambda_L1[i], bool(self.passed[i])


def sandwich_check(lam0: Sequence[float], lamH: Sequence[float], lam1: Sequence[float], rtol: float = 1e-8,
                   params: dict | None = None) -> SandwichReport:
    """Index-wise check of ``lam0[i] <= lamH[i] <= lam1[i]`` with relative slack.

    ``first_failure`` is the zero-based index of the first violated triple.
    """
    l0, lh, l1 = (np.asarray(x, dtype=float) for x in (lam0, lamH, lam1))
    if not (l0.shape == lh.shape == l1.shape) or l0.ndim != 1:
        raise ValidationError("eigenvalue lists must have equal length")
    scale = np.maximum.reduce([np.abs(l0), np.abs(lh), np.abs(l1)])
    slack = rtol * scale
    passed = (l0 <= lh + slack) & (lh <= l1 + slack)
    bad = np.nonzero(~passed)[0]
    first = int(bad[0]) if bad.size else None
    return SandwichReport(l0, lh, l1, passed, bool(passed.all()), first, rtol, dict(params or {}))


def resolvent_check(op: OperatorMatrix, zetas: Sequence[complex]) -> list[dict]:
    """Compare ``||(A + zeta)^-1||`` with ``1/Re zeta`` (mass norm); informational."""
    sim = _similar(op)
    sim = sim.toarray() if sp.issparse(sim) else sim
    eye = np.eye(sim.shape[0])
    out = []
    for z in zetas:
        z = complex(z)
        smin = float(sla.svdvals(sim + z * eye)[-1])
        norm = math.inf if smin == 0.0 else 1.0 / smin
        bound = math.inf if z.real <= 0.0 else 1.0 / z.real
        out.append({"zeta_re": z.real, "zeta_im": z.imag, "norm": norm, "bound": bound, "ok": norm <= bound * (1 + 1e-10)})
    return out
