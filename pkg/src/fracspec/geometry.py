"""Convex domains, ray fans from a boundary point, and grid functions on rays.

Every integral over the domain is written in polar form about a boundary
point ``P``: an angular sum over ray directions times a radial integral with
measure ``r**(n-1) dr``.  Grid functions live on that structure, one row per
ray and one column per radial node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import ValidationError
from .quadrature import cell_moments

__all__ = [
    "ConvexDomain",
    "Ray",
    "RayFan",
    "RadialGrid",
    "GridFunction",
    "HolderEstimate",
    "build_domain",
    "build_ray_fan",
    "radial_mass",
    "weighted_inner_product",
    "weighted_norm",
    "holder_estimate",
]

_KIND_DIM = {"interval": 1, "disk": 2, "box": 2}


@dataclass(frozen=True)
class ConvexDomain:
    """Bounded convex domain.

    interval: ``[0, length]``; disk: centred at the origin; box:
    ``[0, width] x [0, height]``.
    """

    kind: str
    dim: int
    lengths: tuple[float, ...]
    diameter: float

    @property
    def center(self) -> np.ndarray:
        if self.kind == "disk":
            return np.zeros(2)
        if self.kind == "box":
            return 0.5 * np.asarray(self.lengths)
        return np.array([0.5 * self.lengths[0]])

    def contains(self, points, tol: float = 1e-12) -> np.ndarray:
        """Closed-domain membership test for an array of shape ``(..., dim)``."""
        x = np.asarray(points, dtype=float)
        scale = tol * self.diameter
        if self.kind == "interval":
            x = x[..., 0]
            return (x >= -scale) & (x <= self.lengths[0] + scale)
        if self.kind == "disk":
            return np.linalg.norm(x, axis=-1) <= self.lengths[0] + scale
        w, h = self.lengths
        return (
            (x[..., 0] >= -scale) & (x[..., 0] <= w + scale)
            & (x[..., 1] >= -scale) & (x[..., 1] <= h + scale)
        )

    def on_boundary(self, point, tol: float = 1e-12) -> bool:
        p = np.asarray(point, dtype=float).reshape(-1)
        if p.size != self.dim:
            return False
        scale = tol * self.diameter
        if self.kind == "interval":
            return abs(p[0]) <= scale or abs(p[0] - self.lengths[0]) <= scale
        if self.kind == "disk":
            return abs(np.linalg.norm(p) - self.lengths[0]) <= scale
        if not self.contains(p, tol):
            return False
        w, h = self.lengths
        return min(abs(p[0]), abs(p[0] - w), abs(p[1]), abs(p[1] - h)) <= scale


def build_domain(kind: str, **params) -> ConvexDomain:
    """Create a domain from its kind and shape parameters.

    ``interval(length=...)`` (``d`` is accepted as an alias),
    ``disk(radius=...)``, ``box(width=..., height=...)``.
    """
    if kind not in _KIND_DIM:
        raise ValidationError(f"unknown domain kind {kind!r}; expected one of {sorted(_KIND_DIM)}")
    if kind == "interval":
        if "d" in params and "length" not in params:
            params["length"] = params.pop("d")
        names = ("length",)
    elif kind == "disk":
        names = ("radius",)
    else:
        names = ("width", "height")
    extra = set(params) - set(names)
    if extra:
        raise ValidationError(f"unexpected {kind} parameters: {sorted(extra)}")
    values = []
    for name in names:
        if name not in params or params[name] is None:
            raise ValidationError(f"{kind} requires parameter {name!r}")
        v = float(params[name])
        if not math.isfinite(v) or v <= 0.0:
            raise ValidationError(f"{kind} parameter {name!r} must be positive, got {params[name]!r}")
        values.append(v)
    if kind == "interval":
        diameter = values[0]
    elif kind == "disk":
        diameter = 2.0 * values[0]
    else:
        diameter = math.hypot(*values)
    return ConvexDomain(kind=kind, dim=_KIND_DIM[kind], lengths=tuple(values), diameter=diameter)


@dataclass(frozen=True)
class Ray:
    base: np.ndarray
    direction: np.ndarray
    length: float

    def point(self, t):
        t = np.asarray(t, dtype=float)
        return self.base + t[..., None] * self.direction


@dataclass(frozen=True)
class RayFan:
    """Rays from one boundary point with angular quadrature weights."""

    domain: ConvexDomain
    base: np.ndarray
    rays: tuple[Ray, ...]
    angular_weights: np.ndarray
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.rays)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([ray.length for ray in self.rays])

    @property
    def directions(self) -> np.ndarray:
        return np.array([ray.direction for ray in self.rays])

    @property
    def dim(self) -> int:
        return self.domain.dim


def _arc_for_box(domain: ConvexDomain, p: np.ndarray, tol: float) -> tuple[float, float]:
    w, h = domain.lengths
    scale = tol * domain.diameter
    normals = []
    if abs(p[0]) <= scale:
        normals.append(0.0)
    if abs(p[0] - w) <= scale:
        normals.append(math.pi)
    if abs(p[1]) <= scale:
        normals.append(0.5 * math.pi)
    if abs(p[1] - h) <= scale:
        normals.append(1.5 * math.pi)
    c0 = normals[0]
    lo, hi = c0 - 0.5 * math.pi, c0 + 0.5 * math.pi
    for c in normals[1:]:
        c = c + 2.0 * math.pi * round((c0 - c) / (2.0 * math.pi))
        lo, hi = max(lo, c - 0.5 * math.pi), min(hi, c + 0.5 * math.pi)
    return lo, hi


def _box_chord(domain: ConvexDomain, p: np.ndarray, e: np.ndarray) -> float:
    bounds = np.asarray(domain.lengths)
    exits = []
    for k in range(2):
        if e[k] > 1e-15:
            exits.append((bounds[k] - p[k]) / e[k])
        elif e[k] < -1e-15:
            exits.append(-p[k] / e[k])
    return max(0.0, min(exits))


def build_ray_fan(domain: ConvexDomain, base, direction_count: int = 1, tol: float = 1e-12) -> RayFan:
    """Rays from boundary point ``base`` covering the admissible directions.

    Directions are midpoints of a uniform partition of the admissible angle
    set, so the weights are equal and sum to its measure (``pi`` for a disk,
    ``pi/2`` at a box corner, ``pi`` on a box edge, ``1`` on an interval).
    Tangential directions with zero chord are dropped and counted in
    ``skipped``.
    """
    p = np.asarray(base, dtype=float).reshape(-1)
    if p.size != domain.dim:
        raise ValidationError(f"base point must have {domain.dim} coordinates")
    if not domain.on_boundary(p, tol):
        raise ValidationError(f"base point {p.tolist()} is not on the boundary of the {domain.kind}")

    if domain.dim == 1:
        length = domain.lengths[0]
        direction = np.array([1.0]) if abs(p[0]) <= tol * domain.diameter else np.array([-1.0])
        ray = Ray(base=p, direction=direction, length=length)
        return RayFan(domain=domain, base=p, rays=(ray,), angular_weights=np.ones(1))

    count = int(direction_count)
    if count < 1:
        raise ValidationError("direction_count must be at least 1")
    if domain.kind == "disk":
        radius = domain.lengths[0]
        inward = -p / np.linalg.norm(p)
        c0 = math.atan2(inward[1], inward[0])
        lo, hi = c0 - 0.5 * math.pi, c0 + 0.5 * math.pi
    else:
        lo, hi = _arc_for_box(domain, p, tol)
    width = (hi - lo) / count
    angles = lo + (np.arange(count) + 0.5) * width

    rays = []
    weights = []
    skipped = 0
    for theta in angles:
        e = np.array([math.cos(theta), math.sin(theta)])
        if domain.kind == "disk":
            d = -2.0 * float(p @ e)
        else:
            d = _box_chord(domain, p, e)
        if d <= tol * domain.diameter:
            skipped += 1
            continue
        rays.append(Ray(base=p, direction=e, length=min(d, domain.diameter)))
        weights.append(width)
    return RayFan(domain=domain, base=p, rays=tuple(rays), angular_weights=np.asarray(weights), skipped=skipped)


@dataclass(frozen=True)
class RadialGrid:
    """Normalised radial nodes ``0 = s_0 < ... < s_N = 1``.

    A ray of length ``d`` uses the nodes ``d * s``, so the last node sits
    exactly on the chord end.
    """

    nodes: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.nodes, dtype=float)
        if s.ndim != 1 or s.size < 3:
            raise ValidationError("radial grid needs at least two cells")
        if s[0] != 0.0 or s[-1] != 1.0 or not np.all(np.diff(s) > 0.0):
            raise ValidationError("radial nodes must increase strictly from 0 to 1")
        object.__setattr__(self, "nodes", s)

    @classmethod
    def uniform(cls, n: int) -> "RadialGrid":
        return cls(np.linspace(0.0, 1.0, int(n) + 1))

    @classmethod
    def graded(cls, n: int, power: float) -> "RadialGrid":
        """Nodes ``(j/N)**power``; ``power > 1`` clusters nodes near ``r = 0``."""
        if power < 1.0:
            raise ValidationError("grading power must be at least 1")
        s = np.linspace(0.0, 1.0, int(n) + 1) ** power
        s[-1] = 1.0
        return cls(s)

    @property
    def N(self) -> int:
        return self.nodes.size - 1

    def scaled(self, length: float) -> np.ndarray:
        r = length * self.nodes
        r[-1] = length
        return r

    def __eq__(self, other):
        return isinstance(other, RadialGrid) and np.array_equal(self.nodes, other.nodes)

    def __hash__(self):
        return hash(self.nodes.tobytes())


def radial_mass(nodes, n: int) -> np.ndarray:
    """Lumped mass ``int phi_j(r) r**(n-1) dr`` of the hat functions on ``nodes``."""
    t = np.asarray(nodes, dtype=float)
    h = np.diff(t)
    m0, m1 = cell_moments(float(n - 1), t[:-1], h)
    q = np.zeros(t.size)
    q[:-1] += m1 / h
    q[1:] += m0 - m1 / h
    return q


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples on a ray fan: ``values[k, j]`` is the value at ``P + s_j d_k e_k``."""

    values: np.ndarray
    fan: RayFan
    grid: RadialGrid
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values)
        if not np.iscomplexobj(v):
            v = v.astype(float)
        if v.shape != (len(self.fan), self.grid.N + 1):
            raise ValidationError(
                f"values shape {v.shape} does not match ({len(self.fan)}, {self.grid.N + 1})"
            )
        if not np.all(np.isfinite(v)):
            raise ValidationError("grid function has non-finite entries")
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.fan.dim

    def radii(self) -> np.ndarray:
        return self.fan.lengths[:, None] * self.grid.nodes[None, :]

    def positions(self) -> np.ndarray:
        r = self.radii()
        return self.fan.base + r[..., None] * self.fan.directions[:, None, :]

    def with_values(self, values) -> "GridFunction":
        return GridFunction(values, self.fan, self.grid)

    def same_geometry(self, other: "GridFunction") -> bool:
        return self.fan is other.fan and self.grid == other.grid

    def measure(self) -> np.ndarray:
        """Quadrature weights of ``r**(n-1) dr dchi`` at every node."""
        if "measure" not in self._cache:
            self._cache["measure"] = measure_weights(self.fan, self.grid)
        return self._cache["measure"]

    @classmethod
    def from_function(cls, fn: Callable, fan: RayFan, grid: RadialGrid) -> "GridFunction":
        """Sample ``fn(points, r)`` where ``points`` has shape ``(rays, N+1, dim)``."""
        r = fan.lengths[:, None] * grid.nodes[None, :]
        pts = fan.base + r[..., None] * fan.directions[:, None, :]
        return cls(np.asarray(fn(pts, r)), fan, grid)

    @classmethod
    def zeros(cls, fan: RayFan, grid: RadialGrid, dtype=float) -> "GridFunction":
        return cls(np.zeros((len(fan), grid.N + 1), dtype=dtype), fan, grid)

    def __add__(self, other):
        if isinstance(other, GridFunction):
            _require_same(self, other)
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + other)

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            _require_same(self, other)
            return self.with_values(self.values - other.values)
        return self.with_values(self.values - other)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            _require_same(self, other)
            return self.with_values(self.values * other.values)
        return self.with_values(self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)


def measure_weights(fan: RayFan, grid: RadialGrid) -> np.ndarray:
    n = fan.dim
    q = radial_mass(grid.nodes, n)
    return fan.angular_weights[:, None] * fan.lengths[:, None] ** n * q[None, :]


def _require_same(f: GridFunction, g: GridFunction) -> None:
    if not f.same_geometry(g):
        raise ValidationError("grid functions live on different geometries")


def weighted_inner_product(f: GridFunction, g: GridFunction, mask=None) -> complex:
    """``sum_k w_k sum_j q_j f conj(g) r**(n-1)``, linear in ``f``.

    ``mask`` optionally selects the nodes that take part (boolean array with
    the shape of the values).
    """
    _require_same(f, g)
    w = f.measure()
    if mask is not None:
        w = np.where(mask, w, 0.0)
    val = np.sum(w * f.values * np.conj(g.values))
    if np.iscomplexobj(val):
        return complex(val)
    return float(val)


def weighted_norm(f: GridFunction, mask=None) -> float:
    w = f.measure()
    if mask is not None:
        w = np.where(mask, w, 0.0)
    return float(np.sqrt(np.sum(w * np.abs(f.values) ** 2)))


class HolderEstimate(NamedTuple):
    M: float
    inf_rho: float
    monotone: bool


def holder_estimate(
    rho: GridFunction,
    lam: float,
    alpha: float,
    cross_pairs: int = 20000,
    seed: int = 0,
) -> HolderEstimate:
    """Sample-based Hölder constant of a positive weight.

    ``M`` is the largest ``|rho(Q) - rho(Q')| / |Q - Q'|**lam`` over all node
    pairs on each ray plus ``cross_pairs`` random pairs across rays.  Being a
    maximum over samples it is a lower bound for the true constant; pass an
    analytic constant downstream when one is known.

    ``monotone`` reports whether ``rho`` is non-increasing along every ray.
    """
    lam = float(lam)
    if not lam <= 1.0:
        raise ValidationError(f"Hölder exponent must not exceed 1, got {lam}")
    if not lam > alpha:
        raise ValidationError(
            f"Hölder exponent lambda={lam} must exceed the fractional order alpha={alpha}"
        )
    vals = np.asarray(rho.values)
    if np.iscomplexobj(vals):
        if np.any(np.abs(vals.imag) > 0.0):
            raise ValidationError("weight must be real")
        vals = vals.real
    if np.any(vals <= 0.0):
        raise ValidationError("weight must be strictly positive at every node")

    pts = rho.positions()
    best = 0.0
    for k in range(vals.shape[0]):
        v = vals[k]
        x = pts[k]
        dv = np.abs(v[:, None] - v[None, :])
        dist = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=-1)
        ok = dist > 0.0
        if np.any(ok):
            best = max(best, float(np.max(dv[ok] / dist[ok] ** lam)))
    if vals.shape[0] > 1 and cross_pairs > 0:
        rng = np.random.default_rng(seed)
        flat_v = vals.reshape(-1)
        flat_x = pts.reshape(-1, pts.shape[-1])
        a = rng.integers(0, flat_v.size, cross_pairs)
        b = rng.integers(0, flat_v.size, cross_pairs)
        dist = np.linalg.norm(flat_x[a] - flat_x[b], axis=-1)
        ok = dist > 1e-14 * rho.fan.domain.diameter
        if np.any(ok):
            best = max(best, float(np.max(np.abs(flat_v[a] - flat_v[b])[ok] / dist[ok] ** lam)))

    monotone = bool(np.all(np.diff(vals, axis=1) <= 1e-14 * np.max(np.abs(vals))))
    return HolderEstimate(M=best, inf_rho=float(vals.min()), monotone=monotone)
