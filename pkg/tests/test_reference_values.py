"""Closed-form reference values for small, hand-checkable inputs."""

import math

import numpy as np
import pytest

from fracspec import fracops as F
from fracspec.assembly import (
    EllipticCoefficients,
    OperatorMatrix,
    assemble_operator,
    discretize,
    form_matrix,
    green_residual,
)
from fracspec.geometry import (
    GridFunction,
    RadialGrid,
    build_domain,
    build_ray_fan,
    holder_estimate,
    measure_weights,
    weighted_inner_product,
    weighted_norm,
)
from fracspec.quadrature import product_weights
from fracspec.spectral import (
    NuParams,
    accretivity_constants,
    comparison_operators,
    eigen_solve,
    numerical_range_sample,
    sandwich_check,
    sector_fit,
    sector_params_analytic,
)


def _interval(n):
    return discretize(build_domain("interval", length=1.0), n)


def _on(fan, n, fn):
    return GridFunction.from_function(fn, fan, RadialGrid.uniform(n))


# ---------------------------------------------------------------- quadrature

def test_unit_exponent_gives_trapezoid_weights():
    t = np.linspace(0.0, 1.0, 5)
    w = product_weights(t, 1.0).weights
    h = 0.25
    for i in range(1, 5):
        expected = np.zeros(5)
        expected[: i + 1] = h
        expected[[0, i]] = h / 2
        np.testing.assert_allclose(w[i], expected, atol=1e-15)


def test_abel_weights_on_constant_and_linear_data():
    t = np.linspace(0.0, 1.0, 17)
    rule = product_weights(t, 0.5)
    assert rule.apply(np.ones_like(t))[-1] == pytest.approx(2.0, rel=1e-13)
    assert rule.apply(t)[-1] == pytest.approx(4.0 / 3.0, rel=1e-13)


# ------------------------------------------------------------------ geometry

def test_unit_disk_area_and_sine_orthogonality():
    fan = build_ray_fan(build_domain("disk", radius=1.0), [1.0, 0.0], 256)
    grid = RadialGrid.uniform(256)
    assert measure_weights(fan, grid).sum() == pytest.approx(math.pi, rel=1e-3)

    line = build_ray_fan(build_domain("interval", length=1.0), [0.0], 1)
    s1 = _on(line, 512, lambda p, r: np.sin(np.pi * r))
    s2 = _on(line, 512, lambda p, r: np.sin(2 * np.pi * r))
    assert abs(weighted_inner_product(s1, s2)) < 1e-6
    assert weighted_norm(s1) ** 2 == pytest.approx(0.5, rel=1e-5)


def test_constant_weight_has_zero_holder_constant(interval_fan):
    est = holder_estimate(_on(interval_fan, 64, lambda p, r: np.full_like(r, 3.0)), 1.0, 0.5)
    assert est.M == 0.0 and est.monotone and est.inf_rho == 3.0


# ---------------------------------------------------------------- fracops

def test_integral_of_one(interval_fan):
    one = _on(interval_fan, 256, lambda p, r: np.ones_like(r))
    out = F.frac_integral(one, 0.5)
    assert out.values[0, -1] == pytest.approx(2.0 / math.sqrt(math.pi), rel=1e-12)
    assert out.values[0, -1] == pytest.approx(1.128379, abs=1e-6)


def test_integral_of_one_in_the_plane(disk_fan):
    one = _on(disk_fan, 512, lambda p, r: np.ones_like(r))
    out = F.frac_integral(one, 0.5)
    r = one.radii()
    mask = r > 0.05
    exact = 0.752252 * np.sqrt(r)
    np.testing.assert_allclose(out.values[mask], exact[mask], rtol=2e-6)


def test_truncated_derivative_branches(interval_fan):
    one = _on(interval_fan, 256, lambda p, r: np.ones_like(r))
    eps = 0.25
    out = F.truncated_frac_derivative(one, 0.5, eps)
    r = one.radii()[0]
    inside = (r > 0.0) & (r < eps)
    outside = r >= eps
    np.testing.assert_allclose(out.values[0, inside], eps**-0.5 / math.gamma(0.5), rtol=1e-12)
    assert eps**-0.5 / math.gamma(0.5) == pytest.approx(1.128379, abs=1e-6)
    np.testing.assert_allclose(out.values[0, outside], r[outside] ** -0.5 / math.gamma(0.5), rtol=1e-10)


def test_step_function_is_not_representable(interval_fan):
    step = _on(interval_fan, 512, lambda p, r: (r > 0.5).astype(float))
    for alpha in (0.5, 0.75):
        _, diag = F.frac_derivative_limit(step, alpha)
        assert diag.status == "non-representable"


def test_zero_input_has_zero_differences(interval_fan):
    zero = _on(interval_fan, 128, lambda p, r: np.zeros_like(r))
    out, diag = F.frac_derivative_limit(zero, 0.5)
    assert np.all(diag.differences == 0.0) and np.all(out.values == 0.0)


def test_kipriyanov_of_a_constant_on_the_disk(disk_fan):
    c = 2.5
    f = _on(disk_fan, 128, lambda p, r: np.full_like(r, c))
    out = F.kipriyanov_derivative(f, 0.5)
    r = f.radii()
    mask = r > 0.0
    np.testing.assert_allclose(out.values[mask], F.cn_alpha(2, 0.5) * c * r[mask] ** -0.5, rtol=1e-12)


def test_scalar_constants():
    assert F.cn_alpha(3, 0.5) == pytest.approx(1.504506, abs=1e-6)
    assert F.kernel_K(1.0, 0.5) == pytest.approx(1.0 / math.pi, rel=1e-14)
    assert F.kernel_K(-0.3, 0.5) == 0.0


def test_fubini_residual_decreases_with_refinement(interval_fan):
    res = []
    for n in (128, 256, 512, 1024):
        phi = _on(interval_fan, n, lambda p, r: np.cos(3 * r))
        psi = _on(interval_fan, n, lambda p, r: 1.0 + r**2)
        res.append(F.fubini_residual(phi, psi, 0.5))
    assert all(b < a for a, b in zip(res, res[1:]))


def test_representability_with_increasing_weight(interval_fan):
    rho = _on(interval_fan, 512, lambda p, r: 1.0 + r)
    weight = F.HolderWeight.from_samples(rho, 1.0, 0.5)
    bump = _on(interval_fan, 512, lambda p, r: np.sin(np.pi * r) ** 2)
    _, resid = F.representability_solve(weight, bump, 0.5)
    assert resid <= 1e-2


# ---------------------------------------------------------------- assembly

def test_assembled_integral_of_one():
    d = _interval(256)
    op = assemble_operator("I_left", None, d, 0.5)
    x = d.coords[:, 0]
    out = op.apply(np.ones(d.size))
    mid = (x > 0.1) & (x < 0.9)
    np.testing.assert_allclose(out[mid], 2.0 * np.sqrt(x[mid] / math.pi), rtol=1e-2)


def test_pure_diffusion_eigenvalue():
    d = _interval(256)
    L = assemble_operator("L", EllipticCoefficients.constant(1.0, None), d, 0.5)
    assert eigen_solve(L.entries, 1, mass=L.mass)[0] == pytest.approx(math.pi**2, rel=1e-2)


def test_form_of_the_first_sine():
    d = _interval(256)
    u = np.sin(np.pi * d.coords[:, 0])
    t = form_matrix(EllipticCoefficients.constant(1.0, None), d, 0.5, "t")
    assert t(u).real == pytest.approx(math.pi**2 / 2, rel=1e-2)
    full = form_matrix(EllipticCoefficients.constant(1.0, 1.0), d, 0.5, "t")
    value = full(u)
    # coercive and bounded on this field, relative to the squared H1 seminorm
    assert value.real / t(u).real > 1.0 and abs(value) / t(u).real < 2.0


def test_green_identity_for_sines():
    c = EllipticCoefficients.constant(1.0, None)
    res = []
    for n in (64, 128, 256):
        d = _interval(n)
        x = d.coords[:, 0]
        res.append(green_residual(np.sin(np.pi * x), np.sin(2 * np.pi * x), c, d))
    # both sides vanish for orthogonal sines, so only round-off remains
    assert max(res) < 1e-12


# ---------------------------------------------------------------- spectral

def test_mu1_on_the_disk(disk_fan):
    weight = F.HolderWeight.from_samples(_on(disk_fan, 64, lambda p, r: np.ones_like(r)), 1.0, 0.5)
    rep = accretivity_constants(0.5, 2, 1.0, weight, a0=1.0)
    assert rep.mu1 == pytest.approx(1.846284, abs=1e-6)
    forced = F.HolderWeight(weight.rho, 1.0, 0.0, 1.0, monotone=False)
    assert accretivity_constants(0.5, 2, 1.0, forced, a0=1.0).mu == pytest.approx(rep.mu, rel=1e-15)


def test_numerical_range_of_simple_operators():
    ident = OperatorMatrix("I", np.eye(12), np.ones(12))
    np.testing.assert_allclose(numerical_range_sample(ident, 50, seed=0), 1.0, atol=1e-14)
    rng = np.random.default_rng(3)
    b = rng.standard_normal((12, 12))
    herm = OperatorMatrix("H", b + b.T, np.ones(12))
    pts = numerical_range_sample(herm, 80, seed=1)
    lam = np.linalg.eigvalsh(b + b.T)
    assert np.max(np.abs(pts.imag)) <= 1e-12
    assert np.all(pts.real >= lam[0] - 1e-10) and np.all(pts.real <= lam[-1] + 1e-10)


def test_sector_reference_cases():
    assert sector_fit([1.0, 2.0, 7.5]).theta == 0.0
    assert sector_fit([1 + 1j, 1 - 1j], vertex=0.0).theta == pytest.approx(math.pi / 4)
    pts = np.array([2.0 + 1.0j, 3.0 - 0.5j, 4.0])
    s = sector_fit(pts)
    # the fitted vertex is attained by at least one point
    assert np.min(pts.real - np.abs(pts.imag) - s.gamma) == pytest.approx(0.0, abs=1e-14)


def test_analytic_sector_reference_cases():
    nu = NuParams(n=2, l=1, p=2.0, q=4.0, beta=0.01, alpha=0.4)
    assert nu.nu == pytest.approx(0.91)
    s = sector_params_analytic(1.0, 1.0, 0.0, 0.0, 1.0, 1.0, nu, 2.0, 1.0)
    assert s.k == pytest.approx(1.0) and s.theta == pytest.approx(math.pi / 4)
    assert s.gamma == pytest.approx(1.0) and s.feasible
    assert not sector_params_analytic(1.0, 1.0, 0.0, 0.0, 0.1, 1.0, nu, 2.0, 1.0).feasible


def test_eigen_solve_small_cases():
    np.testing.assert_allclose(eigen_solve(np.diag([3.0, 1.0, 2.0]), 3), [1.0, 2.0, 3.0])
    d = _interval(512)
    L = assemble_operator("L", EllipticCoefficients.constant(1.0, None), d, 0.5)
    vals = eigen_solve(L.entries, 3, mass=L.mass)
    np.testing.assert_allclose(vals, math.pi**2 * np.array([1.0, 4.0, 9.0]), rtol=1e-2)


def test_comparators_for_pure_diffusion():
    d = _interval(32)
    comp = comparison_operators(EllipticCoefficients.constant(2.0, None), d, 0.5, 0.0)
    assert comp.a0 == pytest.approx(2.0) and comp.a1 == pytest.approx(2.0)
    assert comp.rho0 == 0.0 and comp.rho1 == pytest.approx(0.0, abs=1e-8)


def test_sandwich_reference_cases():
    same = [1.0, 2.0, 3.0, 4.0]
    assert sandwich_check(same, same, same).ok
    bad = sandwich_check(same, [1.0, 2.0, 3.0, 5.0], same)
    assert not bad.ok and bad.first_failure == 3
