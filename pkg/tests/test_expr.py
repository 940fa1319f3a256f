import math

import numpy as np
import pytest

from smlab import expr as E
from smlab.errors import DomainError, ParseError, RejectedConstruct


def test_parse_simple_shape():
    node = E.parse("1 + v^2")
    assert isinstance(node, E.Bin) and node.op == "+"
    assert isinstance(node.left, E.Num) and node.left.value == 1.0
    assert isinstance(node.right, E.Pow) and node.right.exponent == 2.0
    assert isinstance(node.right.base, E.Var) and node.right.base.name == "v"


def test_parse_cross_cap_G_field():
    node = E.parse("u^2 + 4*v^2")
    vals = E.eval_float(node, np.array([1.0, 2.0]), np.array([0.5, -1.0]))
    assert np.allclose(vals, [1 + 4 * 0.25, 4 + 4.0])


def test_parse_error_offset():
    with pytest.raises(ParseError) as err:
        E.parse("sqrt(")
    assert err.value.offset == 5


def test_rejected_constructs():
    with pytest.raises(RejectedConstruct):
        E.parse("abs(u)")
    with pytest.raises(RejectedConstruct):
        E.parse("u^0.3")
    # half-integer exponents are fine
    E.parse("u^1.5")
    E.parse("u^-2")


def test_unknown_identifier():
    with pytest.raises(ParseError):
        E.parse("tan(u)")
    with pytest.raises(ParseError):
        E.parse("w + 1")


def test_pi_constant():
    node = E.parse("cos(pi)")
    assert E.eval_float(node, 0.0, 0.0) == pytest.approx(-1.0)


def test_eval_jet_spec_examples():
    # u*v at (1,2), order 1 -> 2 + 2 du + 1 dv
    j = E.eval_jet(E.parse("u*v"), (1.0, 2.0), 1)
    assert j.value == pytest.approx(2.0)
    assert j.coeff(1, 0) == pytest.approx(2.0)
    assert j.coeff(0, 1) == pytest.approx(1.0)

    # E-field of the cuspidal edge model at u=1
    j = E.eval_jet(E.parse("4*u^2 + 9*u^4"), (1.0, 0.0), 0)
    assert j.value == pytest.approx(13.0)

    j = E.eval_jet(E.parse("1"), (0.3, -0.7), 3)
    want = np.zeros_like(j.coeffs)
    want[0] = 1.0
    assert np.allclose(j.coeffs, want)


def test_domain_errors():
    with pytest.raises(DomainError):
        E.eval_jet(E.parse("1/u"), (0.0, 1.0), 2)
    with pytest.raises(DomainError):
        E.eval_jet(E.parse("sqrt(u)"), (-1.0, 0.0), 2)


# --- random expression machinery -------------------------------------------

def _random_expr(rng, depth):
    r = rng.rand()
    if depth == 0 or r < 0.25:
        if rng.rand() < 0.5:
            return E.Num(round(rng.uniform(-3, 3), 3))
        return E.Var("u" if rng.rand() < 0.5 else "v")
    if r < 0.65:
        op = rng.choice(["+", "-", "*", "/"])
        return E.Bin(op, _random_expr(rng, depth - 1), _random_expr(rng, depth - 1))
    if r < 0.8:
        return E.Neg(_random_expr(rng, depth - 1))
    if r < 0.92:
        fn = rng.choice(["sin", "cos", "exp", "sqrt"])
        return E.Call(fn, _random_expr(rng, depth - 1))
    return E.Pow(_random_expr(rng, depth - 1), float(rng.choice([2, 3, -1, 0.5, 1.5])))


def test_roundtrip_fixed_point():
    rng = np.random.RandomState(23)
    checked = 0
    for _ in range(300):
        node = _random_expr(rng, 3)
        s1 = E.to_str(node)
        s2 = E.to_str(E.parse(s1))
        assert s2 == E.to_str(E.parse(s2))
        checked += 1
    assert checked == 300


def test_order0_matches_float_eval():
    rng = np.random.RandomState(29)
    checked = 0
    while checked < 1000:
        node = _random_expr(rng, 3)
        u, v = rng.uniform(-2, 2, size=2)
        val = E.eval_float(node, u, v)
        if not np.isfinite(val) or abs(val) > 1e12:
            continue
        try:
            j = E.eval_jet(node, (u, v), 0)
        except DomainError:
            continue
        assert j.value == pytest.approx(float(val), rel=1e-13, abs=1e-13)
        checked += 1


def test_first_derivative_matches_finite_differences():
    rng = np.random.RandomState(31)
    checked = 0
    h = 1e-5
    while checked < 200:
        node = _random_expr(rng, 3)
        u, v = rng.uniform(-1.5, 1.5, size=2)
        us = np.array([u - h, u + h])
        vals = E.eval_float(node, us, np.array([v, v]))
        probe = E.eval_float(node, np.array([u]), np.array([v]))
        if not (np.all(np.isfinite(vals)) and np.isfinite(probe[0])):
            continue
        if np.max(np.abs(vals)) > 1e6:
            continue
        try:
            j = E.eval_jet(node, (u, v), 1)
        except DomainError:
            continue
        fd = (vals[1] - vals[0]) / (2 * h)
        assert j.coeff(1, 0) == pytest.approx(fd, rel=1e-5, abs=1e-5)
        checked += 1


# --- bump built-in -----------------------------------------------------------

def test_bump_values():
    node = E.parse("bump(u)")
    ts = np.array([0.0, 0.2, 0.25, -0.25, 0.75, 0.9, -1.0, 0.5])
    vals = E.eval_float(node, ts, np.zeros_like(ts))
    assert np.allclose(vals[:4], 1.0)
    assert np.allclose(vals[4:7], 0.0)
    assert 0.0 < vals[7] < 1.0
    # symmetric and monotone across the band (flat to machine precision
    # at the ends, hence non-strict)
    band = np.linspace(0.26, 0.74, 41)
    b = E.eval_float(node, band, np.zeros_like(band))
    assert np.all(np.diff(b) <= 0) and b[0] > 0.99 and b[-1] < 1e-6
    assert np.allclose(E.eval_float(node, -band, np.zeros_like(band)), b)


def test_bump_plateau_jets_are_constant():
    node = E.parse("bump(2*sqrt(u^2 + v^2))")
    # inside r <= 1/8 the jet is the constant 1 even though sqrt alone
    # would not be jet-evaluable at the origin
    j = E.eval_jet(node, (0.0, 0.0), 4)
    want = np.zeros_like(j.coeffs)
    want[0] = 1.0
    assert np.allclose(j.coeffs, want)
    j = E.eval_jet(node, (1.0, 0.3), 4)
    assert np.allclose(j.coeffs, 0.0)


def test_bump_transition_jet_matches_finite_differences():
    node = E.parse("bump(u)")
    t0 = 0.5
    j = E.eval_jet(node, (t0, 0.0), 3)
    h = 1e-4
    ts = t0 + h * np.arange(-3, 4)
    vals = E.eval_float(node, ts, np.zeros_like(ts))
    d1 = (vals[4] - vals[2]) / (2 * h)
    d2 = (vals[4] - 2 * vals[3] + vals[2]) / h ** 2
    assert j.deriv(1, 0) == pytest.approx(d1, rel=1e-6, abs=1e-6)
    assert j.deriv(2, 0) == pytest.approx(d2, rel=1e-3, abs=1e-3)


def test_bump_smooth_at_breakpoints():
    node = E.parse("bump(u)")
    for t0 in (0.25, 0.75, -0.25, -0.75):
        j = E.eval_jet(node, (t0, 0.0), 4)
        want = np.zeros_like(j.coeffs)
        want[0] = 1.0 if abs(t0) <= 0.25 else 0.0
        assert np.allclose(j.coeffs, want)
