import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracspec.errors import ValidationError
from fracspec.quadrature import cell_moments, gamma_fn, product_weights

mp.mp.dps = 30


@pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 1.25, 1.9, 2.5, 7.3, 30.0])
def test_gamma_matches_mpmath(x):
    assert gamma_fn(x) == pytest.approx(float(mp.gamma(x)), rel=1e-14)


@pytest.mark.parametrize("x", [0.0, -1.0, -0.5, math.inf, math.nan])
def test_gamma_rejects_nonpositive(x):
    with pytest.raises(ValidationError):
        gamma_fn(x)


@settings(max_examples=40, deadline=None)
@given(p=st.floats(-1.9, 1.5), b=st.floats(1e-6, 3.0), h=st.floats(1e-6, 2.0))
def test_cell_moments_against_mpmath(p, b, h):
    m0, m1 = cell_moments(p, b, h)
    e0 = mp.quad(lambda u: u**p, [b, b + h])
    e1 = mp.quad(lambda u: u**p * (b + h - u), [b, b + h])
    assert float(m0) == pytest.approx(float(e0), rel=1e-10)
    assert float(m1) == pytest.approx(float(e1), rel=1e-9, abs=1e-300)


def test_cell_moments_at_origin():
    m0, m1 = cell_moments(-0.5, 0.0, 0.25)
    assert float(m0) == pytest.approx(2 * 0.25**0.5)
    assert float(m1) == pytest.approx(0.25**1.5 / (0.5 * 1.5))
    with pytest.raises(ValidationError):
        cell_moments(-1.5, 0.0, 0.1)


@settings(max_examples=25, deadline=None)
@given(s=st.floats(0.05, 0.95), c0=st.floats(-2, 2), c1=st.floats(-2, 2), n=st.integers(3, 40))
def test_left_weights_exact_on_linear(s, c0, c1, n):
    t = np.linspace(0.0, 1.0, n + 1)
    w = product_weights(t, s, "left").apply(c0 + c1 * t)
    # int_0^r (c0 + c1 t)(r - t)^{s-1} dt = c0 r^s/s + c1 r^{s+1}/(s(s+1))
    exact = c0 * t**s / s + c1 * t ** (s + 1) / (s * (s + 1))
    np.testing.assert_allclose(w, exact, rtol=1e-11, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(s=st.floats(0.05, 0.95), n=st.integers(3, 40))
def test_right_weights_mirror_left(s, n):
    t = np.sort(np.concatenate([[0.0, 1.0], np.random.default_rng(n).uniform(0.01, 0.99, n)]))
    t = np.unique(t)
    left = product_weights(t, s, "left").weights
    right = product_weights(t, s, "right").weights
    mirrored = product_weights((1.0 - t)[::-1], s, "left").weights[::-1, ::-1]
    np.testing.assert_allclose(right, mirrored, rtol=1e-12, atol=1e-14)
    assert np.all(left >= 0.0) and np.all(right >= 0.0)


def test_product_weights_validates_grid():
    with pytest.raises(ValidationError):
        product_weights([0.0, 0.5, 0.4, 1.0], 0.5)
    with pytest.raises(ValidationError):
        product_weights([0.0], 0.5)
