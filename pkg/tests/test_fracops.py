import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracspec import fracops as F
from fracspec.errors import ValidationError
from fracspec.geometry import GridFunction, RadialGrid, build_domain, build_ray_fan, weighted_norm

alphas = st.floats(0.05, 0.95)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 8), alpha=alphas)
def test_cn_alpha_matches_mpmath_and_series(n, alpha):
    exact = float(mp.factorial(n - 1) / mp.gamma(n - alpha))
    assert F.cn_alpha(n, alpha) == pytest.approx(exact, rel=1e-13)
    assert F.cn_alpha_series(n, alpha) == pytest.approx(exact, rel=1e-13)


def test_cn_alpha_base_case():
    assert F.cn_alpha(1, 0.5) == pytest.approx(1.0 / math.gamma(0.5))


def _kernel_mp(t, alpha):
    c = mp.sin(mp.pi * alpha) / mp.pi
    if t <= 1:
        return c * t ** (alpha - 1)
    return c * (t**alpha - (t - 1) ** alpha) / t


@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_kernel_against_mpmath(alpha):
    t = np.array([1e-3, 0.5, 1.0, 2.0, 50.0, 1e6])
    with mp.workdps(40):
        expect = [float(_kernel_mp(mp.mpf(x), alpha)) for x in t]
        # the tail [1, inf) maps to [0, 1] under t = 1/u, then u = w**k removes the u**-alpha singularity
        k = 1 / (1 - mp.mpf(alpha))
        tail = mp.quad(lambda w: k * w ** (k - 1) * w ** (-k * (1 + alpha)) * -mp.expm1(alpha * mp.log1p(-w**k)), [0, 1])
        mass = mp.sin(mp.pi * alpha) / mp.pi * (1 / mp.mpf(alpha) + tail)
    np.testing.assert_allclose(F.kernel_K(t, alpha), expect, rtol=1e-12)
    assert abs(float(mass) - 1.0) < 1e-10
    assert abs(F.kernel_mass(alpha) - 1.0) < 1e-12


@settings(max_examples=30, deadline=None)
@given(alpha=alphas)
def test_kernel_positive_on_log_grid(alpha):
    assert np.all(F.kernel_K(np.logspace(-8, 8, 2000), alpha) > 0.0)


def test_integral_bound_value():
    assert F.integral_bound(0.5, 2.0) == pytest.approx(math.sqrt(2.0) / math.gamma(1.5))


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.5, math.nan])
def test_fractional_order_validation(bad):
    with pytest.raises(ValidationError):
        F.FractionalOrder(bad)


def test_side_parse():
    assert F.Side.parse("left") is F.Side.LEFT
    assert F.Side.parse(F.Side.RIGHT) is F.Side.RIGHT
    with pytest.raises(ValidationError):
        F.Side.parse("up")


@settings(max_examples=20, deadline=None)
@given(alpha=alphas, c0=st.floats(-3, 3), c1=st.floats(-3, 3))
def test_left_integral_exact_on_linear(alpha, c0, c1):
    t = np.linspace(0.0, 1.0, 65)
    got = F.left_integral_matrix(t, alpha) @ (c0 + c1 * t)
    exact = c0 * t**alpha / math.gamma(alpha + 1) + c1 * t ** (alpha + 1) / math.gamma(alpha + 2)
    np.testing.assert_allclose(got, exact, rtol=1e-11, atol=1e-12)


def test_left_integral_geometric_factor():
    t = np.linspace(0.0, 1.0, 129)
    got = F.left_integral_matrix(t, 0.5, 2) @ np.ones_like(t)
    np.testing.assert_allclose(got, t**0.5 / math.gamma(2.5), atol=1e-14)


@pytest.mark.parametrize("beta", [1.5, 2.0, 3.0])
def test_derivative_of_powers(beta):
    t = np.linspace(0.0, 1.0, 513)
    exact = math.gamma(beta + 1) / math.gamma(beta + 0.5) * t ** (beta - 0.5)
    left = F.left_derivative_matrix(t, 0.5) @ t**beta
    right = F.right_derivative_matrix(t, 0.5) @ (1.0 - t) ** beta
    assert np.max(np.abs(left - exact)) < 1e-3
    assert np.max(np.abs(right - exact[::-1])) < 1e-3


def test_kipriyanov_reduces_to_marchaud_in_one_dimension():
    t = np.linspace(0.0, 1.0, 129)
    np.testing.assert_allclose(F.kipriyanov_matrix(t, 0.4, 1), F.left_derivative_matrix(t, 0.4, 1), atol=1e-12)


@pytest.mark.parametrize("kind, ref", [("I_left", lambda t: F.left_integral_matrix(t, 0.5)),
                                       ("D_left", lambda t: F.left_derivative_matrix(t, 0.5, 2)),
                                       ("I_right", lambda t: F.right_integral_matrix(t, 0.5)),
                                       ("D_right", lambda t: F.right_derivative_matrix(t, 0.5))])
def test_ray_matrix_scaling(kind, ref):
    nodes = np.linspace(0.0, 1.0, 65)
    got = F.ray_matrix(kind, nodes, 2.5, 0.5, 2 if kind == "D_left" else 1)
    np.testing.assert_allclose(got, ref(2.5 * nodes), rtol=1e-12, atol=1e-12)


def test_truncated_matches_full_away_from_origin():
    t = np.linspace(0.0, 1.0, 257)
    f = t**2
    full = F.left_derivative_matrix(t, 0.5) @ f
    errs = [np.max(np.abs(F.truncated_left_matrix(t, 0.5, eps) @ f - full)) for eps in (0.2, 0.1, 0.05)]
    assert errs[0] > errs[1] > errs[2]


def test_truncation_warnings(interval_fan):
    f = GridFunction.from_function(lambda p, r: r**2, interval_fan, RadialGrid.uniform(64))
    with pytest.warns(F.TruncationWarning):
        F.truncated_frac_derivative(f, 0.5, 1e-4)
    with pytest.warns(F.TruncationWarning):
        F.truncated_frac_derivative(f, 0.5, 5.0)
    with pytest.raises(ValidationError):
        F.truncated_frac_derivative(f, 0.5, 0.0)


def test_limit_diagnostic_for_representable(interval_fan):
    g = GridFunction.from_function(lambda p, r: np.cos(2 * r) + r, interval_fan, RadialGrid.uniform(256))
    _, diag = F.frac_derivative_limit(F.frac_integral(g, 0.5, "left"), 0.5, "left")
    assert diag.status == "representable" and diag.slope > 0.0
    assert np.all(np.diff(diag.eps) < 0.0)


@settings(max_examples=15, deadline=None)
@given(alpha=alphas, seed=st.integers(0, 2**32 - 1))
def test_integral_operators_are_linear_and_bounded(alpha, seed):
    fan = build_ray_fan(build_domain("interval", length=1.0), [0.0], 1)
    rng = np.random.default_rng(seed)
    grid = RadialGrid.uniform(64)
    a = GridFunction(rng.standard_normal((1, 65)), fan, grid)
    b = GridFunction(rng.standard_normal((1, 65)), fan, grid)
    for side in ("left", "right"):
        lhs = F.frac_integral(2.0 * a + b, alpha, side)
        rhs = 2.0 * F.frac_integral(a, alpha, side) + F.frac_integral(b, alpha, side)
        np.testing.assert_allclose(lhs.values, rhs.values, atol=1e-12)
        assert weighted_norm(F.frac_integral(a, alpha, side)) <= F.integral_bound(alpha, 1.0) * weighted_norm(a)


def test_adjoint_and_fubini_residuals(disk_fan):
    grid = RadialGrid.uniform(128)
    phi = GridFunction.from_function(lambda p, r: 1.0 + r, disk_fan, grid)
    psi = GridFunction.from_function(lambda p, r: 2.0 - r**2, disk_fan, grid)
    scale = weighted_norm(phi) * weighted_norm(psi)
    assert F.adjoint_residual(phi, psi, 0.5) / scale < 1e-12
    assert F.fubini_residual(phi, psi, 0.5) / scale < 1e-3


def test_representability_residual(disk_fan):
    grid = RadialGrid.uniform(128)
    rho = GridFunction.from_function(lambda p, r: 1.0 + r, disk_fan, grid)
    weight = F.HolderWeight.from_samples(rho, 1.0, 0.5)
    bump = GridFunction.from_function(lambda p, r: np.sin(np.pi * r / disk_fan.lengths.max()) ** 2, disk_fan, grid)
    _, resid = F.representability_solve(weight, bump, 0.5)
    assert resid < 1e-2


def test_holder_weight_rejects_negative_constant(disk_fan):
    rho = GridFunction.from_function(lambda p, r: 1.0 + r, disk_fan, RadialGrid.uniform(16))
    with pytest.raises(ValidationError):
        F.HolderWeight.from_samples(rho, 1.0, 0.5, M=-1.0)
