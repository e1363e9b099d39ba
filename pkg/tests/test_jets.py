import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gravinst.jets import JetDomainError, JetScalar, jet_context, jet_lift


def test_jet_lift_coordinate_structure():
    x = jet_lift((0.0, 0.0, 0.0, 0.0), 2)
    assert x[0].value() == 0.0
    assert x[0].coefficient((1, 0, 0, 0)) == 1.0
    assert x[0].coefficient((0, 1, 0, 0)) == 0.0
    assert x[0].coefficient((2, 0, 0, 0)) == 0.0


def test_jet_lift_polynomial_evaluation():
    x0, x1, _, _ = jet_lift((2.0, 3.0, 0.0, 0.0), 2)
    f = x0 * x1
    assert f.value() == 6.0
    assert f.coefficient((1, 0, 0, 0)) == 3.0
    assert f.coefficient((1, 1, 0, 0)) == 1.0


def test_sqrt_series_matches_symbolic_expansion():
    # oracle: sympy series of sqrt(1 + t)
    import sympy as sp
    t = sp.Symbol("t")
    series = sp.series(sp.sqrt(1 + t), t, 0, 4).removeO().as_poly(t)
    expected = [float(series.coeff_monomial(t ** k)) for k in range(4)]
    ctx = jet_context(1, 3)
    x = ctx.lift(np.array([0.0]))[0]
    s = ctx.sqrt(ctx.const(np.array(1.0)) + x)
    assert np.allclose(s, expected, atol=1e-15)
    assert np.allclose(s, [1.0, 0.5, -0.125, 0.0625])


@pytest.mark.parametrize("fn,sfn", [("exp", "exp"), ("log", "log"),
                                    ("sin", "sin"), ("cos", "cos"),
                                    ("atan", "atan")])
def test_analytic_functions_match_sympy(fn, sfn):
    import sympy as sp
    ctx = jet_context(1, 5)
    x0 = 0.7
    x = ctx.lift(np.array([x0]))[0]
    got = getattr(ctx, fn)(x)
    t = sp.Symbol("t")
    ser = sp.series(getattr(sp, sfn)(x0 + t), t, 0, 6).removeO()
    expected = [float(sp.expand(ser).coeff(t, k)) for k in range(6)]
    assert np.allclose(got, expected, rtol=1e-13, atol=1e-15)


def test_truncation_commutes_with_composition():
    # (f*g)*h truncated equals f*(g*h) truncated, and products of lifted
    # coordinates reproduce exact polynomial coefficients
    ctx = jet_context(2, 4)
    pt = np.array([1.5, -0.5])
    x, y = ctx.lift(pt)
    f = ctx.mul(x, x) + 3.0 * y
    g = ctx.mul(x, y)
    h = ctx.const(np.array(2.0)) + x
    left = ctx.mul(ctx.mul(f, g), h)
    right = ctx.mul(f, ctx.mul(g, h))
    assert np.allclose(left, right, atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(min_value=-2, max_value=2), min_size=6, max_size=6),
       st.lists(st.floats(min_value=-2, max_value=2), min_size=6, max_size=6))
def test_product_derivative_is_leibniz(ac, bc):
    # d(ab) = da b + a db holds exactly on truncations (degree < K)
    ctx = jet_context(2, 3)
    a = np.zeros(ctx.n)
    b = np.zeros(ctx.n)
    a[:6], b[:6] = ac, bc
    ab = ctx.mul(a, b)
    for v in range(2):
        lhs = ctx.deriv(ab, v)
        rhs = ctx.mul(ctx.deriv(a, v), b) + ctx.mul(a, ctx.deriv(b, v))
        # top-degree coefficients are unknown after a derivative
        keep = ctx.degrees <= ctx.order - 1
        assert np.allclose(lhs[keep], rhs[keep], rtol=1e-12, atol=1e-12)


def test_inverse_and_division():
    ctx = jet_context(3, 4)
    rng = np.random.default_rng(3)
    a = rng.normal(size=(5, ctx.n))
    a[:, 0] = 2.0 + rng.random(5)
    inv = ctx.inv(a)
    prod = ctx.mul(a, inv)
    expected = np.zeros_like(prod)
    expected[:, 0] = 1.0
    assert np.allclose(prod, expected, atol=1e-12)


def test_division_requires_nonzero_constant_term():
    ctx = jet_context(2, 3)
    a = ctx.lift(np.array([0.0, 1.0]))[0]  # vanishing constant term
    with pytest.raises(JetDomainError):
        ctx.inv(a)
    with pytest.raises(JetDomainError):
        ctx.sqrt(a - 1.0 * ctx.const(np.array(1.0)))


def test_jetscalar_operators_roundtrip():
    x = jet_lift((0.3, 0.0, 0.0, 0.0), 4)[0]
    f = (1.0 + x * x).sqrt().log().exp() - (1.0 + x * x).sqrt()
    assert abs(f.value()) < 1e-14
    g = x.sin() * x.sin() + x.cos() * x.cos()
    assert abs(g.value() - 1.0) < 1e-14
    assert abs(g.coefficient((1, 0, 0, 0))) < 1e-14


def test_gradient_coefficients_match_finite_differences():
    # degree-1 coefficients vs Richardson-extrapolated central differences
    ctx = jet_context(2, 4)

    def field(pts):
        x, y = pts[..., 0], pts[..., 1]
        return np.exp(0.3 * x) * np.sin(y) + x * x * y

    rng = np.random.default_rng(11)
    pts = rng.uniform(0.5, 1.5, size=(10, 2))
    jets = ctx.lift(pts)
    f = ctx.mul(ctx.exp(0.3 * jets[..., 0, :]), ctx.sin(jets[..., 1, :])) \
        + ctx.mul(ctx.mul(jets[..., 0, :], jets[..., 0, :]), jets[..., 1, :])
    grad = ctx.gradient(f)
    h = 1e-3
    for v in range(2):
        e = np.zeros(2)
        e[v] = 1.0
        d1 = (field(pts + h * e) - field(pts - h * e)) / (2 * h)
        d2 = (field(pts + 0.5 * h * e) - field(pts - 0.5 * h * e)) / h
        richardson = (4.0 * d2 - d1) / 3.0
        assert np.allclose(grad[:, v], richardson, rtol=1e-9, atol=1e-11)
