import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from fracspec.assembly import EllipticCoefficients, OperatorMatrix, assemble_operator, discretize
from fracspec.errors import OrderingError, ValidationError
from fracspec.fracops import HolderWeight, cn_alpha
from fracspec.geometry import GridFunction, RadialGrid, build_domain, build_ray_fan
from fracspec.spectral import (
    NuParams,
    accretivity_constants,
    comparison_operators,
    eigen_solve,
    empirical_rayleigh,
    numerical_range_sample,
    sandwich_check,
    sector_exact,
    sector_fit,
    sector_params_analytic,
)


@pytest.fixture(scope="module")
def interval64():
    d = discretize(build_domain("interval", length=1.0), 64)
    return d, EllipticCoefficients.constant(1.0, 1.0)


def _weight(fan, rho, lam=1.0, alpha=0.5, **kw):
    g = GridFunction.from_function(rho, fan, RadialGrid.uniform(64))
    return HolderWeight.from_samples(g, lam, alpha, **kw)


@pytest.mark.parametrize("n, diam, expected", [(1, 1.0, 0.564190), (2, 1.0, 0.846284), (2, math.sqrt(2.0), 0.7116)])
def test_mu_for_constant_weight(interval_fan, disk_fan, n, diam, expected):
    fan = interval_fan if n == 1 else disk_fan
    rep = accretivity_constants(0.5, n, diam, _weight(fan, lambda p, r: np.ones_like(r)), a0=1.0)
    assert rep.monotone_branch
    assert rep.mu == pytest.approx(expected, abs=5e-5)
    formula = 0.5 * diam**-0.5 * (1 / math.gamma(0.5) + cn_alpha(n, 0.5))
    assert rep.mu == pytest.approx(formula, rel=1e-14)
    assert rep.mu1 == pytest.approx(1.0 + rep.mu)


def test_mu_penalises_increasing_weight(disk_fan):
    flat = accretivity_constants(0.5, 2, 1.0, _weight(disk_fan, lambda p, r: np.ones_like(r)))
    grow = accretivity_constants(0.5, 2, 1.0, _weight(disk_fan, lambda p, r: 1.0 + r, M=1.0))
    assert not grow.monotone_branch
    penalty = 0.5 * 1.0 / (2 * math.gamma(0.5) * 0.5 * 1.0)
    assert grow.mu == pytest.approx(flat.mu - penalty, rel=1e-12)


def test_empirical_accretivity_above_mu(interval64):
    d, c = interval64
    op = assemble_operator("Kipriyanov", c, d, 0.5)
    res = empirical_rayleigh(op, rho=c.rho_values(d.coords), trials=50, seed=2)
    assert res.minimum >= 0.564190 - 1e-2 and res.trials == 50


def test_sector_fit_on_known_points():
    z = np.array([2.0, 3.0 + 1.0j, 3.0 - 1.0j, 5.0 + 0.5j])
    s = sector_fit(z)
    assert s.gamma == pytest.approx(2.0)
    assert s.theta == pytest.approx(math.pi / 4)
    assert np.all(s.contains(z, slack=1e-12))
    fixed = sector_fit(z, vertex=2.5)
    assert fixed.boundary and fixed.theta == pytest.approx(math.pi / 2) and fixed.gamma == 2.0


@settings(max_examples=40, deadline=None)
@given(pts=st.lists(st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False), min_size=1, max_size=30),
       slope=st.floats(0.1, 10.0))
def test_sector_fit_contains_its_points(pts, slope):
    s = sector_fit(pts, slope=slope)
    scale = max(1.0, max(abs(z) for z in pts))
    assert np.all(s.contains(pts, slack=1e-9 * scale))
    assert s.theta <= math.pi / 2


def test_sector_fit_rejects_bad_input():
    with pytest.raises(ValidationError):
        sector_fit([])
    with pytest.raises(ValidationError):
        sector_fit([1.0, math.nan])


def test_sector_exact_bounds_samples(interval64):
    d, c = interval64
    L = assemble_operator("L", c, d, 0.5)
    pts = numerical_range_sample(L, 300, seed=1)
    exact = sector_exact(L)
    assert exact <= np.min(pts.real - np.abs(pts.imag)) + 1e-9
    assert exact > 0.0


def test_hermitian_operator_has_real_range(interval64):
    d, c = interval64
    H = assemble_operator("H", c, d, 0.5)
    pts = numerical_range_sample(H, 200, seed=4)
    assert sector_fit(pts).theta <= 1e-6


def _dirichlet(n):
    h = 1.0 / (n + 1)
    main = np.full(n, 2.0 / h**2)
    off = np.full(n - 1, -1.0 / h**2)
    exact = 4.0 / h**2 * np.sin(np.arange(1, n + 1) * np.pi * h / 2) ** 2
    return sp.diags([off, main, off], [-1, 0, 1], format="csr"), exact


@pytest.mark.parametrize("n", [200, 2000])
def test_eigen_solve_dirichlet_oracle(n):
    mat, exact = _dirichlet(n)
    vals = eigen_solve(mat, 6)
    np.testing.assert_allclose(vals, exact[:6], rtol=1e-10)


def test_eigen_solve_large_indefinite_falls_back():
    rng = np.random.default_rng(0)
    n = 1600
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    spectrum = np.concatenate([[-50.0, -3.0], np.linspace(0.5, 100.0, n - 2)])
    mat = (q * spectrum) @ q.T
    vals = eigen_solve(mat, 3)
    np.testing.assert_allclose(vals, [-50.0, -3.0, 0.5], atol=1e-8)


def test_eigen_solve_mass_weighted(rng):
    mass = rng.uniform(0.5, 2.0, 30)
    b = rng.standard_normal((30, 30))
    sym = b + b.T
    a = sym / mass[:, None]  # self-adjoint in the mass product
    vals, vecs = eigen_solve(a, 4, mass=mass, return_vectors=True)
    np.testing.assert_allclose(a @ vecs, vecs * vals, atol=1e-9)


def test_eigen_solve_rejects_nonsymmetric():
    with pytest.raises(ValidationError):
        eigen_solve(np.array([[1.0, 2.0], [0.0, 1.0]]), 1)
    with pytest.raises(ValidationError):
        eigen_solve(np.eye(3), 4)


def test_sandwich_check_reports_first_failure():
    rep = sandwich_check([1.0, 2.0, 3.0], [1.5, 1.9, 3.5], [2.0, 3.0, 4.0])
    assert not rep.ok and rep.first_failure == 1
    assert [row[0] for row in rep.rows()] == [1, 2, 3]
    assert sandwich_check([1.0], [1.0 + 1e-12], [1.0]).ok


def test_comparators_order_the_real_part(interval64):
    d, c = interval64
    H = assemble_operator("H", c, d, 0.5)
    comp = comparison_operators(c, d, 0.5, 0.564190, H=H)
    assert comp.rho0 == pytest.approx(0.564190) and comp.rho1 > comp.rho1_raw
    rep = sandwich_check(eigen_solve(comp.L0, 10), eigen_solve(H, 10), eigen_solve(comp.L1, 10))
    assert rep.ok


def test_comparators_detect_bad_lower_constant(interval64):
    d, c = interval64
    with pytest.raises(OrderingError):
        comparison_operators(c, d, 0.5, 50.0)


def test_nu_params_constraints():
    nu = NuParams(n=2, l=1, p=2.0, q=4.0, beta=0.1, alpha=0.3)
    assert nu.nu == pytest.approx((2 / 1) * (0.5 - 0.25) + 0.4)
    with pytest.raises(ValidationError):
        NuParams(n=2, l=1, p=3.0, q=4.0, beta=0.1, alpha=0.3)
    with pytest.raises(ValidationError):
        NuParams(n=2, l=1, p=2.0, q=2.0, beta=0.1, alpha=0.3)


def test_sector_params_analytic_formula():
    nu = NuParams(n=1, l=1, p=1.0, q=2.0, beta=0.1, alpha=0.3)
    s = sector_params_analytic(1.0, 2.0, 0.5, 0.5, 0.5, 1.0, nu, 1.0, 4.0)
    k = 1.0 / (0.5 * 0.5 + 2.0)
    assert s.k == pytest.approx(k)
    assert s.gamma == pytest.approx(4.0 - k * (0.25 + 2.0))
    assert s.feasible and s.theta == pytest.approx(math.atan(1 / k))
    with pytest.raises(ValidationError):
        sector_params_analytic(2.0, 1.0, 0.5, 0.5, 0.5, 1.0, nu, 1.0, 4.0)
