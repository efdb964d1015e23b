"""Analyses behind the command-line commands.

Each analysis takes a :class:`~fracspec.config.RunConfig` and returns a
result dict with a ``checks`` list; every check has an ``id``, the measured
``value``, its ``threshold`` and a ``pass`` flag.  No files are written here.
"""

from __future__ import annotations

import math

import numpy as np

from .assembly import EllipticCoefficients, assemble_operator, laplacian_matrix
from .config import RunConfig
from .errors import ValidationError
from .fracops import (
    CAUCHY_MIN_SLOPE,
    Side,
    adjoint_residual,
    cn_alpha,
    cn_alpha_series,
    frac_derivative,
    frac_derivative_limit,
    frac_integral,
    fubini_residual,
    integral_bound,
    kernel_K,
    kernel_mass,
    kipriyanov_derivative,
    representability_solve,
)
from .geometry import GridFunction, RadialGrid, weighted_norm
from .spectral import (
    NuParams,
    accretivity_constants,
    comparison_operators,
    eigen_solve,
    empirical_rayleigh,
    numerical_range_sample,
    resolvent_check,
    sandwich_check,
    sector_exact,
    sector_fit,
    sector_params_analytic,
)

__all__ = ["run_identities", "run_accretivity", "run_range", "run_sandwich", "smooth_density", "bump"]


def _check(cid: str, value: float, threshold: float, passed: bool, **extra) -> dict:
    out = {"id": cid, "value": float(value), "threshold": float(threshold), "pass": bool(passed)}
    out.update(extra)
    return out


def smooth_density(r: np.ndarray, diameter: float) -> np.ndarray:
    s = r / diameter
    return np.cos(2.0 * s) + s


def bump(f: GridFunction) -> GridFunction:
    """Smooth field vanishing to second order on the boundary of the domain."""
    dom = f.fan.domain
    x = f.positions()
    if dom.kind == "interval":
        length = dom.lengths[0]
        b = 4.0 * x[..., 0] * (length - x[..., 0]) / length**2
    elif dom.kind == "box":
        w, h = dom.lengths
        b = 16.0 * x[..., 0] * (w - x[..., 0]) * x[..., 1] * (h - x[..., 1]) / (w * h) ** 2
    else:
        r2 = dom.lengths[0] ** 2
        b = (r2 - np.sum(x * x, axis=-1)) / r2
    return f.with_values(np.clip(b, 0.0, None) ** 2)


def _mask(f: GridFunction, side: Side) -> np.ndarray:
    mask = np.ones(f.values.shape, dtype=bool)
    mask[:, 0 if side is Side.LEFT else -1] = False
    return mask


def _inversion_error(fan, cells: int, alpha: float, side: Side) -> float:
    grid = RadialGrid.uniform(cells)
    g = GridFunction.from_function(lambda p, r: smooth_density(r, fan.domain.diameter), fan, grid)
    back = frac_derivative(frac_integral(g, alpha, side), alpha, side)
    mask = _mask(g, side)
    return weighted_norm(back - g, mask) / weighted_norm(g, mask)


def run_identities(cfg: RunConfig) -> dict:
    alpha = cfg.alpha
    disc = cfg.discretization()
    fan, grid = disc.fan, disc.grid
    diam = cfg.domain.diameter
    tol = cfg.tolerances
    rng = np.random.default_rng(cfg.seed)
    checks = []

    gaps = [abs(cn_alpha(n, a) - cn_alpha_series(n, a))
            for n in range(1, 7) for a in (0.1, 0.25, 0.5, 0.75, 0.9, alpha)]
    checks.append(_check("gamma_identity", max(gaps), 1e-12, max(gaps) < 1e-12))

    mass_err = max(abs(kernel_mass(a) - 1.0) for a in (0.25, 0.5, 0.75, alpha))
    checks.append(_check("kernel_unit_mass", mass_err, 1e-8, mass_err < 1e-8))
    kmin = float(np.min(kernel_K(np.logspace(-6, 6, 10_000), alpha)))
    checks.append(_check("kernel_positive", kmin, 0.0, kmin > 0.0))

    bound = integral_bound(alpha, diam)
    worst = 0.0
    for _ in range(100):
        g = GridFunction(rng.standard_normal((len(fan), grid.N + 1)), fan, grid)
        for side in ("left", "right"):
            worst = max(worst, weighted_norm(frac_integral(g, alpha, side)) / weighted_norm(g))
    checks.append(_check("integral_norm_bound", worst / bound, 1.0 + tol["bound_slack"],
                         worst <= bound * (1.0 + tol["bound_slack"]), bound=bound))

    levels = [max(8, grid.N // 4), max(16, grid.N // 2), grid.N]
    for side in (Side.LEFT, Side.RIGHT):
        errs = [_inversion_error(fan, n, alpha, side) for n in levels]
        decreasing = all(b < a for a, b in zip(errs, errs[1:]))
        checks.append(_check(f"inversion_{side.value}", errs[-1], tol["inversion"],
                             errs[-1] <= tol["inversion"] and decreasing, levels=levels, errors=errs))

    phi = GridFunction.from_function(lambda p, r: 1.0 + r / diam - (r / diam) ** 2, fan, grid)
    psi = GridFunction.from_function(lambda p, r: 2.0 - r / diam + 0.5 * (r / diam) ** 3, fan, grid)
    f = frac_integral(phi, alpha, "left")
    g = frac_integral(psi, alpha, "right")
    scale = weighted_norm(f) * weighted_norm(g)
    adj = adjoint_residual(phi, psi, alpha) / scale
    checks.append(_check("adjointness", adj, tol["adjointness"], adj <= tol["adjointness"]))
    fub = fubini_residual(phi, psi, alpha) / (weighted_norm(phi) * weighted_norm(psi))
    checks.append(_check("fubini", fub, tol["adjointness"], fub <= tol["adjointness"]))

    test = bump(GridFunction.zeros(fan, grid))
    mask = _mask(test, Side.LEFT)
    d_lim = frac_derivative(test, alpha, "left")
    d_kip = kipriyanov_derivative(test, alpha)
    gap = weighted_norm(d_lim - d_kip, mask) / weighted_norm(d_lim, mask)
    checks.append(_check("restriction_kipriyanov", gap, tol["restriction"], gap <= tol["restriction"]))

    coeffs = cfg.coefficients(disc)
    if coeffs.rho is not None:
        weight = coeffs.holder_weight(disc, alpha)
        _, resid = representability_solve(weight, test, alpha)
        checks.append(_check("representability", resid, tol["representability"], resid <= tol["representability"]))

    g0 = GridFunction.from_function(lambda p, r: smooth_density(r, diam), fan, grid)
    _, diag = frac_derivative_limit(frac_integral(g0, alpha, "left"), alpha, "left")
    checks.append(_check("limit_cauchy", diag.slope, CAUCHY_MIN_SLOPE, diag.status == "representable",
                         status=diag.status, differences=diag.differences.tolist()))
    return {"command": "identities", "checks": checks}


def run_accretivity(cfg: RunConfig) -> dict:
    alpha = cfg.alpha
    disc = cfg.discretization()
    coeffs = cfg.coefficients(disc)
    if coeffs.rho is None:
        raise ValidationError("accretivity needs a weight rho")
    a0, a1 = coeffs.bounds(disc.coords) if disc.cells is not None else (None, None)
    weight = coeffs.holder_weight(disc, alpha)
    rep = accretivity_constants(alpha, cfg.domain.dim, cfg.domain.diameter, weight, a0=a0)
    op = assemble_operator("Kipriyanov", coeffs, disc, alpha)
    rho_nodes = coeffs.rho_values(disc.coords)
    ray = empirical_rayleigh(op, rho=rho_nodes, trials=cfg.analysis["trials"], seed=cfg.seed)
    slack = cfg.tolerances["accretivity_slack"]
    checks = [_check("accretivity_empirical", ray.minimum, rep.mu - slack, ray.minimum >= rep.mu - slack)]
    result = {
        "command": "accretivity",
        "mu": rep.mu,
        "mu1": rep.mu1,
        "a0": a0,
        "a1": a1,
        "inf_rho": rep.inf_rho,
        "M": rep.M,
        "M_is_analytic": rep.M_is_analytic,
        "lambda": rep.lam,
        "monotone_branch": rep.monotone_branch,
        "empirical_min": ray.minimum,
        "trials": ray.trials,
        "skipped_directions": disc.fan.skipped,
    }
    sec = cfg.analysis.get("analytic_sector")
    if sec is not None and a0 is not None:
        nu = NuParams(n=cfg.domain.dim, l=int(sec["l"]), p=sec["p"], q=sec["q"], beta=sec["beta"], alpha=alpha)
        an = sector_params_analytic(a0, a1, sec["C2"], sec["C3"], sec["eps"], sec["delta"], nu, rep.mu, rep.inf_rho)
        result["analytic_sector"] = an.as_dict()
        result["gamma_positive"] = an.feasible
    else:
        result["gamma_positive"] = None
    result["checks"] = checks
    return result


def run_range(cfg: RunConfig) -> dict:
    alpha = cfg.alpha
    disc = cfg.discretization()
    coeffs = cfg.coefficients(disc)
    L = assemble_operator("L", coeffs, disc, alpha)
    count = cfg.analysis["range_samples"]
    slope = cfg.analysis["sector_slope"]
    pts = numerical_range_sample(L, count, seed=cfg.seed)
    sector = sector_fit(pts, slope=slope)
    inside = sector.contains(pts, slack=1e-10 * max(1.0, float(np.max(np.abs(pts)))))
    exact = sector_exact(L, slope)
    checks = [
        _check("sector_containment", float(np.count_nonzero(~inside)), 0.0, bool(inside.all())),
        _check("sector_vertex_positive", sector.gamma, 0.0, sector.gamma > 0.0),
    ]
    herm_coeffs = EllipticCoefficients(a=coeffs.a, rho=None, lam=coeffs.lam)
    L_herm = assemble_operator("L", herm_coeffs, disc, alpha)
    herm = sector_fit(numerical_range_sample(L_herm, count, seed=cfg.seed), slope=slope)
    checks.append(_check("sector_hermitian_angle", herm.theta, 1e-6, herm.theta <= 1e-6))
    result = {
        "command": "range",
        "sector": sector.as_dict(),
        "exact_vertex": exact,
        "hermitian_sector": herm.as_dict(),
        "samples": pts,
        "checks": checks,
    }
    if L.size <= 1500:
        zetas = [complex(*z) if isinstance(z, list) else complex(z) for z in cfg.analysis["resolvent_zetas"]]
        result["resolvent"] = resolvent_check(L, zetas)
    return result


def _laplace_oracle(domain, count: int) -> np.ndarray:
    if domain.kind == "interval":
        k = np.arange(1, count + 1)
        return (np.pi * k / domain.lengths[0]) ** 2
    w, h = domain.lengths
    k = np.arange(1, count + 2)
    vals = np.sort(((np.pi * k[:, None] / w) ** 2 + (np.pi * k[None, :] / h) ** 2).ravel())
    return vals[:count]


def run_sandwich(cfg: RunConfig) -> dict:
    alpha = cfg.alpha
    disc = cfg.discretization()
    if disc.cells is None:
        raise ValidationError("the eigenvalue comparison needs a tensor grid (interval or box)")
    coeffs = cfg.coefficients(disc)
    m = min(cfg.analysis["eigen_count"], disc.size)
    a0, _ = coeffs.bounds(disc.coords)
    if coeffs.rho is not None:
        weight = coeffs.holder_weight(disc, alpha)
        rep = accretivity_constants(alpha, cfg.domain.dim, cfg.domain.diameter, weight, a0=a0)
        mu, mu1 = rep.mu, rep.mu1
    else:
        mu, mu1 = 0.0, a0
    H = assemble_operator("H", coeffs, disc, alpha)
    comp = comparison_operators(coeffs, disc, alpha, mu, H=H, validation=cfg.analysis["validation_fields"],
                                seed=cfg.seed)
    lh = eigen_solve(H, m)
    l0 = eigen_solve(comp.L0, m)
    l1 = eigen_solve(comp.L1, m)
    report = sandwich_check(l0, lh, l1, cfg.tolerances["sandwich_rtol"], comp.params())
    lap = eigen_solve(laplacian_matrix(disc), min(5, m), mass=disc.mass)
    oracle = _laplace_oracle(cfg.domain, lap.size)
    rel = 0.0
    for a_k, r_k, lam_k in ((comp.a0, comp.rho0, l0), (comp.a1, comp.rho1, l1)):
        expect = a_k * oracle + r_k
        rel = max(rel, float(np.max(np.abs(lam_k[: lap.size] - expect) / np.abs(expect))))
    frac = cfg.tolerances["positivity_fraction"]
    checks = [
        _check("eigenvalue_sandwich", float(np.count_nonzero(~report.passed)), 0.0, report.ok,
               first_failure=report.first_failure),
        _check("real_part_positive", float(lh[0]), mu1 * (1.0 - frac), lh[0] >= mu1 * (1.0 - frac), mu1=mu1),
        _check("comparator_oracle", rel, 0.01, rel <= 0.01),
    ]
    return {
        "command": "sandwich",
        "report": report,
        "params": comp.params(),
        "mu": mu,
        "mu1": mu1,
        "checks": checks,
    }
