import math

import numpy as np
import pytest

from smlab.errors import BasePointMismatch, DivisionByDegenerate, NegativeRadicand
from smlab.jet import Jet2, index_of, jet_compose, size


def poly_to_jet(c2d, order, point=(0.0, 0.0)):
    """Build a jet from a dense 2-D coefficient table c2d[i, j] ~ u^i v^j
    (coefficients around the base point)."""
    coeffs = np.zeros(size(order))
    for i in range(c2d.shape[0]):
        for j in range(c2d.shape[1]):
            if i + j <= order:
                coeffs[index_of(i, j)] = c2d[i, j]
    return Jet2(order, point, coeffs)


def jet_to_poly(jet):
    c = np.zeros((jet.order + 1, jet.order + 1))
    for i in range(jet.order + 1):
        for j in range(jet.order + 1 - i):
            c[i, j] = jet.coeff(i, j)
    return c


def poly_mul_truncated(a, b, order):
    """Independent oracle: dense 2-D convolution, then truncation."""
    out = np.zeros((order + 1, order + 1))
    for i1 in range(a.shape[0]):
        for j1 in range(a.shape[1]):
            for i2 in range(b.shape[0]):
                for j2 in range(b.shape[1]):
                    i, j = i1 + i2, j1 + j2
                    if i + j <= order:
                        out[i, j] += a[i1, j1] * b[i2, j2]
    return out


def test_mul_spec_example():
    # (1+u)(1+v) at order 2 -> 1 + u + v + uv
    u, v = Jet2.variables(2)
    prod = (1 + u) * (1 + v)
    expected = np.zeros((3, 3))
    expected[0, 0] = expected[1, 0] = expected[0, 1] = expected[1, 1] = 1.0
    assert np.allclose(jet_to_poly(prod), expected)


def test_sqrt_spec_example():
    # sqrt(1+2u) at order 2 -> 1 + u - u^2/2
    u, _ = Jet2.variables(2)
    s = (1 + 2 * u).sqrt()
    assert s.coeff(0, 0) == pytest.approx(1.0)
    assert s.coeff(1, 0) == pytest.approx(1.0)
    assert s.coeff(2, 0) == pytest.approx(-0.5)
    assert s.coeff(0, 1) == 0.0


def test_div_identity_spec_example():
    u, v = Jet2.variables(3)
    w = 1 + u + v
    q = w / w
    expected = np.zeros(size(3))
    expected[0] = 1.0
    assert np.allclose(q.coeffs, expected, atol=1e-15)


def test_div_requires_nonzero_constant():
    u, _ = Jet2.variables(2)
    with pytest.raises(DivisionByDegenerate):
        (1 + u) / u


def test_sqrt_requires_positive_constant():
    u, _ = Jet2.variables(2)
    with pytest.raises(NegativeRadicand):
        u.sqrt()
    with pytest.raises(NegativeRadicand):
        (u - 1).sqrt()


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        Jet2(1, (0, 0), np.array([1.0, np.nan, 0.0]))
    with pytest.raises(ValueError):
        Jet2(1, (0, 0), np.array([np.inf, 0.0, 0.0]))


def test_mul_matches_dense_convolution():
    rng = np.random.RandomState(7)
    for _ in range(60):
        order = rng.randint(1, 5)
        a = rng.uniform(-2, 2, size=(5, 5))
        b = rng.uniform(-2, 2, size=(5, 5))
        ja = poly_to_jet(a, order)
        jb = poly_to_jet(b, order)
        got = jet_to_poly(ja * jb)
        want = poly_mul_truncated(jet_to_poly(ja), jet_to_poly(jb), order)
        assert np.allclose(got, want, rtol=1e-12, atol=1e-12)


def test_leibniz_coefficient():
    rng = np.random.RandomState(11)
    for _ in range(40):
        a = poly_to_jet(rng.uniform(-3, 3, size=(5, 5)), 4)
        b = poly_to_jet(rng.uniform(-3, 3, size=(5, 5)), 4)
        prod = a * b
        want = a.coeff(1, 0) * b.coeff(0, 0) + a.coeff(0, 0) * b.coeff(1, 0)
        assert prod.coeff(1, 0) == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_division_roundtrip():
    rng = np.random.RandomState(13)
    for _ in range(40):
        a = poly_to_jet(rng.uniform(-2, 2, size=(5, 5)), 4)
        c = rng.uniform(-2, 2, size=(5, 5))
        c[0, 0] = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0)
        b = poly_to_jet(c, 4)
        back = (a / b) * b
        assert np.allclose(back.coeffs, a.coeffs, rtol=1e-11, atol=1e-11)


def test_elementary_series_against_univariate_taylor():
    # jets of g(u) in one variable must reproduce g's Taylor coefficients
    pts = [0.3, -0.7, 1.2]
    for t0 in pts:
        u, _ = Jet2.variables(4, point=(t0, 0.0))
        for fn, ref in [(lambda j: j.sin(), np.sin), (lambda j: j.cos(), np.cos),
                        (lambda j: j.exp(), np.exp)]:
            jet = fn(u)
            for k in range(5):
                h = 1e-2
                # 9-point central finite difference of order k as oracle
                xs = t0 + h * np.arange(-4, 5)
                ys = ref(xs)
                d = ys.copy()
                for _ in range(k):
                    d = np.gradient(d, h)
                assert jet.deriv(k, 0) == pytest.approx(d[4], rel=2e-3, abs=2e-3)


def test_halfinteger_power():
    u, _ = Jet2.variables(4)
    a = 1 + u
    p = a ** 1.5
    q = a.sqrt() * a
    assert np.allclose(p.coeffs, q.coeffs, rtol=1e-13, atol=1e-13)
    with pytest.raises(ValueError):
        a ** 0.3


def test_compose_spec_examples():
    # outer = x^2, inner_x = u+v, inner_y = 0 -> u^2 + 2uv + v^2
    x, _ = Jet2.variables(2)
    outer = x * x
    u, v = Jet2.variables(2)
    res = jet_compose(outer, u + v, Jet2.constant(0.0, 2))
    assert res.coeff(2, 0) == pytest.approx(1.0)
    assert res.coeff(1, 1) == pytest.approx(2.0)
    assert res.coeff(0, 2) == pytest.approx(1.0)

    # identity composition leaves the jet unchanged
    rng = np.random.RandomState(3)
    f = poly_to_jet(rng.uniform(-1, 1, size=(5, 5)), 4)
    u4, v4 = Jet2.variables(4)
    assert np.allclose(jet_compose(f, u4, v4).coeffs, f.coeffs, atol=1e-14)

    # outer = sin(x) at 0, inner = u^2 at order 4 -> u^2 exactly
    x4, _ = Jet2.variables(4)
    outer = x4.sin()
    res = jet_compose(outer, u4 * u4, Jet2.constant(0.0, 4))
    want = np.zeros(size(4))
    want[index_of(2, 0)] = 1.0
    assert np.allclose(res.coeffs, want, atol=1e-15)


def test_compose_base_point_mismatch():
    x, _ = Jet2.variables(2, point=(1.0, 0.0))
    u, v = Jet2.variables(2)
    with pytest.raises(BasePointMismatch):
        jet_compose(x * x, u, v)


def test_compose_distributes_over_mul():
    rng = np.random.RandomState(5)
    for _ in range(25):
        f = poly_to_jet(rng.uniform(-1, 1, size=(5, 5)), 4)
        g = poly_to_jet(rng.uniform(-1, 1, size=(5, 5)), 4)
        hx = poly_to_jet(rng.uniform(-0.5, 0.5, size=(5, 5)), 4)
        hy = poly_to_jet(rng.uniform(-0.5, 0.5, size=(5, 5)), 4)
        hx.coeffs[0] = f.point[0]
        hy.coeffs[0] = f.point[1]
        lhs = jet_compose(f * g, hx, hy)
        rhs = jet_compose(f, hx, hy) * jet_compose(g, hx, hy)
        assert np.allclose(lhs.coeffs, rhs.coeffs, rtol=1e-12, atol=1e-12)


def test_derivative_jets():
    rng = np.random.RandomState(17)
    f = poly_to_jet(rng.uniform(-1, 1, size=(5, 5)), 4)
    fu = f.d_du()
    fv = f.d_dv()
    for i in range(4):
        for j in range(4 - i):
            assert fu.coeff(i, j) == pytest.approx((i + 1) * f.coeff(i + 1, j))
            assert fv.coeff(i, j) == pytest.approx((j + 1) * f.coeff(i, j + 1))


def test_deriv_factorial_scaling():
    u, v = Jet2.variables(4)
    f = u * u * v  # f = u^2 v, f_uuv = 2
    assert f.deriv(2, 1) == pytest.approx(2.0)
    assert f.deriv(1, 1) == 0.0


def test_eval_at_offset():
    u, v = Jet2.variables(3, point=(1.0, 2.0))
    f = u * u + 3 * v
    # polynomial is exact: f(1.2, 1.9) = 1.44 + 5.7
    assert f.eval_at_offset(0.2, -0.1) == pytest.approx(1.44 + 5.7)


def test_coeff_length_invariant():
    for order in range(5):
        assert size(order) == (order + 1) * (order + 2) // 2
        j = Jet2.constant(1.0, order)
        assert len(j.coeffs) == size(order)
