import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ellipsoidvol.quadrature import (
    DEFAULT_SPEC,
    NonConvergence,
    QuadratureSpec,
    integrate_line,
)


def rel(x, y):
    return abs(x - y) / abs(y)


@pytest.mark.parametrize(
    "f, exact",
    [
        (lambda s: (1 + s * s) ** -2.5, 4 / 3),
        (lambda s: np.exp(-s * s), math.sqrt(math.pi)),
        (lambda s: 1 / (1 + s * s), math.pi),
    ],
    ids=["power", "gauss", "arctan"],
)
@pytest.mark.parametrize("even", [False, True])
def test_closed_forms(f, exact, even):
    res = integrate_line(f, even=even)
    assert rel(res.value, exact) <= 1e-12
    assert res.error_estimate >= 0
    assert res.subdivisions_used <= DEFAULT_SPEC.max_subdivisions


def test_vector_integrand():
    def f(s):
        return np.stack([(1 + s * s) ** -2.5, 1 / (1 + s * s), np.exp(-s * s)])

    res = integrate_line(f)
    np.testing.assert_allclose(res.value, [4 / 3, math.pi, math.sqrt(math.pi)], rtol=1e-12)
    assert res.error_estimate.shape == (3,)


def test_narrow_feature_forces_subdivision():
    eps = 1e-3
    res = integrate_line(lambda s: eps / (s * s + eps * eps) / (1 + s * s))
    exact = math.pi / (1 + eps)
    assert rel(res.value, exact) <= 1e-10
    assert res.subdivisions_used > 0


def test_budget_exhaustion_raises():
    spec = QuadratureSpec(rel_tol=1e-14, abs_tol=0, max_subdivisions=2)
    with pytest.raises(NonConvergence):
        integrate_line(lambda s: 1e-6 / (s * s + 1e-12), spec)


def test_interior_nonfinite_sample_raises():
    with pytest.raises(FloatingPointError):
        integrate_line(lambda s: np.where(np.abs(s - 0.3) < 0.2, np.nan, 1 / (1 + s * s)))


def test_nonfinite_endpoint_tolerated():
    # theta = pi/2 is never a Gauss node, so an integrand that blows up only
    # at infinity still integrates when it is integrable
    res = integrate_line(lambda s: 1 / (1 + s * s) + 0 * s)
    assert rel(res.value, math.pi) < 1e-12


@pytest.mark.parametrize(
    "kwargs", [dict(rel_tol=0), dict(abs_tol=-1), dict(max_subdivisions=0)]
)
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        QuadratureSpec(**kwargs)


widths = st.floats(min_value=0.05, max_value=20)


@settings(max_examples=40, deadline=None)
@given(alpha=st.floats(-5, 5), beta=st.floats(-5, 5), w1=widths, w2=widths)
def test_linearity(alpha, beta, w1, w2):
    f = lambda s: 1 / (w1 * w1 + s * s)
    g = lambda s: (1 + (s / w2) ** 2) ** -2
    combo = integrate_line(lambda s: alpha * f(s) + beta * g(s)).value
    parts = alpha * integrate_line(f).value + beta * integrate_line(g).value
    scale = abs(alpha) * math.pi / w1 + abs(beta) * math.pi * w2 / 2
    assert abs(combo - parts) <= 2 * DEFAULT_SPEC.rel_tol * scale + 1e-14


@settings(max_examples=40, deadline=None)
@given(lam=st.floats(min_value=1e-3, max_value=1e3))
def test_scaling_covariance(lam):
    f = lambda s: (1 + s * s) ** -1.5 * (2 + np.tanh(s - 0.5))
    scaled = integrate_line(lambda s: f(lam * s)).value
    assert rel(scaled, integrate_line(f).value / lam) <= 2e-10


@settings(max_examples=30, deadline=None)
@given(w=widths, p=st.floats(min_value=1.2, max_value=4))
def test_even_matches_full_line(w, p):
    f = lambda s: (w * w + s * s) ** (-p / 2)
    full = integrate_line(f).value
    half = integrate_line(f, even=True).value
    assert rel(half, full) <= 2e-10
