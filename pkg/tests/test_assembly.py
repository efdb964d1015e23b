import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracspec.assembly import (
    EllipticCoefficients,
    assemble_operator,
    discretize,
    form_matrix,
    green_residual,
    laplacian_matrix,
)
from fracspec.errors import EllipticityError, ValidationError
from fracspec.geometry import build_domain


def _box(n):
    return discretize(build_domain("box", width=1.0, height=1.0), n, [0.0, 0.0])


def _interval(n):
    return discretize(build_domain("interval", length=1.0), n)


def _variable():
    return EllipticCoefficients(a=lambda x: np.einsum("i,jk->ijk", 1.0 + x[:, 0], np.eye(2)),
                                rho=lambda x: 1.0 + x[:, 1])


def test_interior_mass_and_sizes():
    d1 = _interval(16)
    assert d1.size == 15 and d1.mass.sum() == pytest.approx(15 / 16)
    d2 = _box(16)
    assert d2.size == 225 and d2.mass.sum() == pytest.approx((15 / 16) ** 2)


def test_disk_uses_ray_nodes():
    d = discretize(build_domain("disk", radius=0.5), 32, [0.5, 0.0], 32)
    assert d.kind == "fan" and d.cells is None
    assert np.all(d.mass > 0.0)


def test_coefficient_validation():
    pts = np.zeros((3, 2))
    with pytest.raises(ValidationError):
        EllipticCoefficients.constant([[1.0, 2.0], [0.0, 1.0]]).bounds(pts)
    with pytest.raises(EllipticityError):
        EllipticCoefficients.constant([[1.0, 0.0], [0.0, -1.0]]).bounds(pts)
    a0, a1 = EllipticCoefficients.constant(np.eye(2)).bounds(pts)
    assert a0 == pytest.approx(1.0) and a1 == pytest.approx(math.sqrt(2.0))


def test_unknown_operator_kind():
    with pytest.raises(ValidationError):
        assemble_operator("div", EllipticCoefficients.constant(1.0), _interval(8), 0.5)


@pytest.mark.parametrize("make", [_interval, _box])
def test_real_part_is_self_adjoint(make):
    d = make(16)
    c = EllipticCoefficients.constant(1.0 if d.dim == 1 else np.eye(2))
    assert assemble_operator("H", c, d, 0.5).hermitian_defect() < 1e-12
    assert assemble_operator("L", c, d, 0.5).hermitian_defect() > 1e-6


def test_formal_adjoint_in_one_dimension():
    d = _interval(32)
    c = EllipticCoefficients(a=lambda x: 1.0 + x[:, 0], rho=lambda x: 2.0 - x[:, 0])
    L = assemble_operator("L", c, d, 0.5)
    Lp = assemble_operator("L_plus", c, d, 0.5)
    np.testing.assert_allclose(L.adjoint_entries(), Lp.dense(), atol=1e-12)


def test_formal_adjoint_converges_on_box():
    gaps = []
    for n in (16, 32):
        d = _box(n)
        L = assemble_operator("L", _variable(), d, 0.5)
        Lp = assemble_operator("L_plus", _variable(), d, 0.5)
        gaps.append(np.linalg.norm(L.adjoint_entries() - Lp.dense()) / np.linalg.norm(Lp.dense()))
    assert gaps[1] < gaps[0] < 1e-4


def test_laplacian_symmetric_in_mass_product(rng):
    d = _box(12)
    lap = laplacian_matrix(d)
    u, v = rng.standard_normal((2, d.size))
    assert np.sum(d.mass * (lap @ u) * v) == pytest.approx(np.sum(d.mass * (lap @ v) * u), abs=1e-12)


def test_green_identity_converges():
    res = []
    for n in (16, 32):
        d = _box(n)
        x, y = d.coords.T
        u = np.sin(np.pi * x) * np.sin(np.pi * y)
        v = x * (1 - x) * y * (1 - y)
        res.append(green_residual(u, v, _variable(), d))
    assert res[1] < res[0] / 4 and res[1] < 1e-3


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_form_matches_operator(seed):
    d = _interval(24)
    c = EllipticCoefficients(a=lambda x: 1.0 + x[:, 0] ** 2, rho=lambda x: 1.0 + x[:, 0])
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(d.size) + 1j * rng.standard_normal(d.size)
    v = rng.standard_normal(d.size) + 1j * rng.standard_normal(d.size)
    L = assemble_operator("L", c, d, 0.5)
    t = form_matrix(c, d, 0.5, "t")
    assert t(u, v) == pytest.approx(L.inner(L.apply(u), v), rel=1e-10, abs=1e-10)
    h = form_matrix(c, d, 0.5, "h")
    assert h(u, u).real == pytest.approx(t(u, u).real, rel=1e-10)


def test_form_needs_tensor_grid():
    d = discretize(build_domain("disk", radius=0.5), 16, [0.5, 0.0], 8)
    with pytest.raises(ValidationError):
        form_matrix(EllipticCoefficients.constant(np.eye(2)), d, 0.5)
