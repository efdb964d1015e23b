"""Run configuration: JSON parsing, validation and line-anchored errors."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .assembly import Discretization, EllipticCoefficients, discretize
from .errors import ValidationError
from .expr import Expression, parse_expression
from .fracops import FractionalOrder
from .geometry import ConvexDomain, build_domain

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config"]

_TOP = {"domain", "alpha", "grid", "coefficients", "seed", "analysis", "tolerances", "output"}
_REQUIRED = ("domain", "alpha", "grid", "coefficients", "seed")
_DOMAIN = {"kind", "length", "radius", "width", "height", "base", "directions", "radial_cells"}
_GRID = {"cells"}
_COEFF = {"a", "rho", "lambda", "M", "monotone"}
_ANALYSIS = {"trials", "range_samples", "eigen_count", "sector_slope", "validation_fields",
             "analytic_sector", "resolvent_zetas"}
_SECTOR = {"C2", "C3", "eps", "delta", "l", "p", "q", "beta"}
_TOL = {"sandwich_rtol", "accretivity_slack", "positivity_fraction", "inversion", "adjointness",
        "representability", "restriction", "bound_slack"}

DEFAULT_ANALYSIS = {
    "trials": 200,
    "range_samples": 500,
    "eigen_count": 20,
    "sector_slope": 1.0,
    "validation_fields": 50,
    "analytic_sector": None,
    "resolvent_zetas": [1.0, 10.0, [1.0, 5.0]],
}
DEFAULT_TOLERANCES = {
    "sandwich_rtol": 1e-8,
    "accretivity_slack": 1e-2,
    "positivity_fraction": 0.05,
    "inversion": 5e-2,
    "adjointness": 1e-3,
    "representability": 1e-2,
    "restriction": 5e-2,
    "bound_slack": 1e-6,
}


class ConfigError(ValidationError):
    """Invalid configuration; ``line`` points into the source file when known."""

    def __init__(self, message: str, line: int | None = None, source: str = "<config>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}: " if line else f"{source}: "
        super().__init__(where + message)


def _locate(text: str, path: tuple[str, ...]) -> int | None:
    """Line of the last key of ``path``, found by scanning keys in order."""
    pos = 0
    found = None
    for key in path:
        idx = text.find(f'"{key}"', pos)
        if idx < 0:
            break
        found = idx
        pos = idx + 1
    if found is None:
        return None
    return text.count("\n", 0, found) + 1


@dataclass(eq=False)
class RunConfig:
    domain: ConvexDomain
    base: tuple[float, ...] | None
    directions: int | None
    radial_cells: int | None
    alpha: float
    cells: int
    a_spec: Any
    rho_spec: Any
    lam: float
    M: float | None
    monotone: bool | None
    seed: int
    analysis: dict
    tolerances: dict
    output: str | None
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def config_hash(self) -> str:
        canon = json.dumps({**self.raw, "seed": self.seed}, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def with_seed(self, seed: int) -> "RunConfig":
        cfg = RunConfig(**{k: getattr(self, k) for k in self.__dataclass_fields__})
        cfg.seed = int(seed)
        return cfg

    def discretization(self) -> Discretization:
        return discretize(self.domain, self.cells, self.base, self.directions, self.radial_cells)

    def base_point(self, disc: Discretization) -> np.ndarray:
        return disc.fan.base

    def coefficients(self, disc: Discretization) -> EllipticCoefficients:
        base = disc.fan.base
        a_fn = _matrix_field(self.a_spec, disc.dim, base)
        rho_fn = None
        if self.rho_spec is not None:
            expr = parse_expression(self.rho_spec)
            rho_fn = lambda pts, _e=expr: _e(pts, base)  # noqa: E731
        return EllipticCoefficients(
            a=a_fn, rho=rho_fn, lam=self.lam, M=self.M, monotone=self.monotone,
            description=f"a={self.a_spec}, rho={self.rho_spec}",
        )


def _matrix_field(spec, dim: int, base):
    if isinstance(spec, list):
        exprs = [[parse_expression(v) for v in row] for row in spec]

        def field_fn(pts):
            pts = np.asarray(pts, dtype=float)
            out = np.empty((pts.shape[0], dim, dim))
            for i in range(dim):
                for j in range(dim):
                    out[:, i, j] = exprs[i][j](pts, base)
            return out

        return field_fn
    expr = parse_expression(spec)
    return lambda pts: expr(pts, base)


def _fail(msg: str, text: str, path: tuple[str, ...], source: str):
    raise ConfigError(msg, _locate(text, path), source)


def _number(value, text, path, source, positive=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(f"'{'.'.join(path)}' must be a number", text, path, source)
    if not math.isfinite(value):
        _fail(f"'{'.'.join(path)}' must be finite", text, path, source)
    if integer and (not isinstance(value, int) and not float(value).is_integer()):
        _fail(f"'{'.'.join(path)}' must be an integer", text, path, source)
    if positive and value <= 0:
        _fail(f"'{'.'.join(path)}' must be positive", text, path, source)
    return int(value) if integer else float(value)


def _keys(obj, allowed, text, path, source):
    if not isinstance(obj, dict):
        _fail(f"'{'.'.join(path)}' must be an object", text, path, source)
    for key in obj:
        if key not in allowed:
            _fail(f"unknown key '{key}'" + (f" in '{'.'.join(path)}'" if path else ""), text, path + (key,), source)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse and validate configuration text; every error is a :class:`ConfigError`."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno, source) from None
    _keys(raw, _TOP, text, (), source)
    for key in _REQUIRED:
        if key not in raw:
            raise ConfigError(f"missing required key '{key}'", None, source)

    dom = raw["domain"]
    _keys(dom, _DOMAIN, text, ("domain",), source)
    kind = dom.get("kind")
    if kind not in ("interval", "disk", "box"):
        _fail("domain.kind must be one of interval, disk, box", text, ("domain", "kind"), source)
    shape_keys = {"interval": ("length",), "disk": ("radius",), "box": ("width", "height")}[kind]
    params = {}
    for key in shape_keys:
        if key not in dom:
            _fail(f"{kind} needs '{key}'", text, ("domain",), source)
        params[key] = _number(dom[key], text, ("domain", key), source, positive=True)
    for key in ("length", "radius", "width", "height"):
        if key in dom and key not in shape_keys:
            _fail(f"'{key}' does not apply to a {kind}", text, ("domain", key), source)
    try:
        domain = build_domain(kind, **params)
    except ValidationError as exc:
        _fail(str(exc), text, ("domain",), source)
    base = None
    if dom.get("base") is not None:
        b = dom["base"]
        if not isinstance(b, list) or len(b) != domain.dim:
            _fail(f"domain.base must list {domain.dim} coordinates", text, ("domain", "base"), source)
        base = tuple(_number(v, text, ("domain", "base"), source) for v in b)
        if not domain.on_boundary(np.asarray(base), 1e-9):
            _fail("domain.base must lie on the boundary", text, ("domain", "base"), source)
    directions = None
    if dom.get("directions") is not None:
        directions = _number(dom["directions"], text, ("domain", "directions"), source, positive=True, integer=True)
    radial = None
    if dom.get("radial_cells") is not None:
        radial = _number(dom["radial_cells"], text, ("domain", "radial_cells"), source, positive=True, integer=True)

    alpha = _number(raw["alpha"], text, ("alpha",), source)
    try:
        FractionalOrder(alpha)
    except ValidationError as exc:
        _fail(str(exc), text, ("alpha",), source)

    grid = raw["grid"]
    _keys(grid, _GRID, text, ("grid",), source)
    if "cells" not in grid:
        _fail("grid needs 'cells'", text, ("grid",), source)
    cells = _number(grid["cells"], text, ("grid", "cells"), source, positive=True, integer=True)
    if cells < 4:
        _fail("grid.cells must be at least 4", text, ("grid", "cells"), source)

    coeff = raw["coefficients"]
    _keys(coeff, _COEFF, text, ("coefficients",), source)
    a_spec = coeff.get("a", 1.0)
    try:
        if isinstance(a_spec, list):
            if len(a_spec) != domain.dim or any(not isinstance(r, list) or len(r) != domain.dim for r in a_spec):
                raise ValidationError(f"coefficients.a must be a {domain.dim}x{domain.dim} matrix")
            for row in a_spec:
                for v in row:
                    parse_expression(v)
        else:
            parse_expression(a_spec)
    except ValidationError as exc:
        _fail(str(exc), text, ("coefficients", "a"), source)
    rho_spec = coeff.get("rho", 1.0)
    if rho_spec is not None:
        try:
            parse_expression(rho_spec)
        except ValidationError as exc:
            _fail(str(exc), text, ("coefficients", "rho"), source)
    lam = _number(coeff.get("lambda", 1.0), text, ("coefficients", "lambda"), source)
    if not (alpha < lam <= 1.0):
        _fail(
            f"Hölder exponent lambda={lam} must satisfy alpha < lambda <= 1 (weight rho in Lip lambda, alpha={alpha})",
            text, ("coefficients", "lambda"), source,
        )
    M = coeff.get("M")
    if M is not None:
        M = _number(M, text, ("coefficients", "M"), source)
        if M < 0:
            _fail("coefficients.M must be nonnegative", text, ("coefficients", "M"), source)
    monotone = coeff.get("monotone")
    if monotone is not None and not isinstance(monotone, bool):
        _fail("coefficients.monotone must be true, false or null", text, ("coefficients", "monotone"), source)

    seed = raw["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or not (0 <= seed < 2**64):
        _fail("seed must be an unsigned 64-bit integer", text, ("seed",), source)

    analysis = dict(DEFAULT_ANALYSIS)
    if "analysis" in raw:
        _keys(raw["analysis"], _ANALYSIS, text, ("analysis",), source)
        analysis.update(raw["analysis"])
    for key in ("trials", "range_samples", "eigen_count", "validation_fields"):
        analysis[key] = _number(analysis[key], text, ("analysis", key), source, positive=True, integer=True)
    analysis["sector_slope"] = _number(analysis["sector_slope"], text, ("analysis", "sector_slope"), source, positive=True)
    if analysis["analytic_sector"] is not None:
        sec = analysis["analytic_sector"]
        _keys(sec, _SECTOR, text, ("analysis", "analytic_sector"), source)
        for key in _SECTOR:
            if key not in sec:
                _fail(f"analytic_sector needs '{key}'", text, ("analysis", "analytic_sector"), source)
            _number(sec[key], text, ("analysis", "analytic_sector", key), source)
    zetas = analysis["resolvent_zetas"]
    if not isinstance(zetas, list):
        _fail("resolvent_zetas must be a list", text, ("analysis", "resolvent_zetas"), source)
    for z in zetas:
        if isinstance(z, list):
            if len(z) != 2:
                _fail("complex shifts are [re, im] pairs", text, ("analysis", "resolvent_zetas"), source)
            for v in z:
                _number(v, text, ("analysis", "resolvent_zetas"), source)
        else:
            _number(z, text, ("analysis", "resolvent_zetas"), source)

    tolerances = dict(DEFAULT_TOLERANCES)
    if "tolerances" in raw:
        _keys(raw["tolerances"], _TOL, text, ("tolerances",), source)
        for key, value in raw["tolerances"].items():
            tolerances[key] = _number(value, text, ("tolerances", key), source, positive=True)

    output = raw.get("output")
    if output is not None and not isinstance(output, str):
        _fail("output must be a directory path", text, ("output",), source)

    return RunConfig(
        domain=domain, base=base, directions=directions, radial_cells=radial, alpha=alpha, cells=cells,
        a_spec=a_spec, rho_spec=rho_spec, lam=lam, M=M, monotone=monotone, seed=int(seed),
        analysis=analysis, tolerances=tolerances, output=output, raw=raw,
    )


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}", None, str(p)) from None
    return parse_config(text, str(p))
