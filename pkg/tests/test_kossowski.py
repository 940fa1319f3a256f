import numpy as np
import pytest

from smlab import expr as X
from smlab import kossowski as K
from smlab.charts import Chart, PolyMap2
from smlab.errors import DegenerateStart, NotA2, NotNormalized
from smlab.metric import (SurfaceMap, induced_metric, metric_from_exprs,
                          pullback)


def cuspidal_edge():
    f = SurfaceMap(
        x=X.parse("u^2"), y=X.parse("u^3"), z=X.parse("v"),
        nu=(X.parse("3*u / sqrt(9*u^2 + 4)"), X.parse("-2 / sqrt(9*u^2 + 4)"), X.parse("0")),
        domain=(-1.0, 1.0, -1.0, 1.0))
    return induced_metric(f)


def swallowtail():
    f = SurfaceMap(
        x=X.parse("3*u^4 + u^2*v"), y=X.parse("4*u^3 + 2*u*v"), z=X.parse("v"),
        nu=(X.parse("1 / sqrt(1 + u^2 + u^4)"),
            X.parse("-(u) / sqrt(1 + u^2 + u^4)"),
            X.parse("u^2 / sqrt(1 + u^2 + u^4)")),
        domain=(-0.25, 0.25, -0.5, 0.3))
    return induced_metric(f)


def cuspidal_cross_cap():
    f = SurfaceMap(
        x=X.parse("u"), y=X.parse("v^2"), z=X.parse("u*v^3"),
        nu=(X.parse("-(2*v^3) / sqrt(4 + 9*u^2*v^2 + 4*v^6)"),
            X.parse("-(3*u*v) / sqrt(4 + 9*u^2*v^2 + 4*v^6)"),
            X.parse("2 / sqrt(4 + 9*u^2*v^2 + 4*v^6)")),
        domain=(-0.6, 0.6, -0.6, 0.6))
    return induced_metric(f)


def normal_form(alpha="-1 + v", beta="2", domain=(-0.5, 0.5, -0.35, 0.35)):
    E = f"1 + v^2*({alpha})"
    G = f"v^2*(1 + v*({beta}))"
    lam = f"v*sqrt((1 + v^2*({alpha}))*(1 + v*({beta})))"
    return metric_from_exprs(E, "0", G, lam=lam, domain=domain).validate()


# --- tracing -------------------------------------------------------------------

def test_trace_cuspidal_edge_is_v_axis():
    m = cuspidal_edge()
    c = K.trace_singular_curve(m, (0.1, 0.0))
    pts = np.array([s.point for s in c.samples])
    assert np.max(np.abs(pts[:, 0])) < 1e-10
    assert pts[:, 1].min() < -0.95 and pts[:, 1].max() > 0.95
    for s in c.samples:
        assert np.allclose(s.eta, (1.0, 0.0), atol=1e-9)
    assert not c.closed


def test_trace_swallowtail_parabola():
    m = swallowtail()
    c = K.trace_singular_curve(m, (0.15, -0.1))
    pts = np.array([s.point for s in c.samples])
    assert np.max(np.abs(pts[:, 1] + 6 * pts[:, 0] ** 2)) < 1e-9
    assert pts[:, 0].min() < -0.2 and pts[:, 0].max() > 0.2
    for s in c.samples:
        assert abs(s.eta[1]) < 1e-8  # null direction stays (1, 0)


def test_trace_cuspidal_cross_cap_u_axis():
    m = cuspidal_cross_cap()
    c = K.trace_singular_curve(m, (0.0, 0.1))
    pts = np.array([s.point for s in c.samples])
    assert np.max(np.abs(pts[:, 1])) < 1e-10
    for s in c.samples:
        assert np.allclose(s.eta, (0.0, 1.0), atol=1e-9)
    # oracle: every sample is rank 1
    from smlab.metric import null_space
    for s in c.samples[:: max(1, len(c.samples) // 10)]:
        rank, _ = null_space(m, s.point)
        assert rank == 1


def test_trace_requires_lambda_and_gradient():
    m = metric_from_exprs("1", "0", "1")
    with pytest.raises(ValueError):
        K.trace_singular_curve(m, (0.0, 0.0))
    # lambda = v^2 has vanishing gradient on its zero set: degenerate seed
    bad = metric_from_exprs("1", "0", "v^4", lam="v^2",
                            domain=(-0.5, 0.5, -0.5, 0.5))
    with pytest.raises(DegenerateStart):
        K.trace_singular_curve(bad, (0.0, 0.0))


# --- classification --------------------------------------------------------------

def test_classify_cuspidal_edge_all_a2():
    c = K.trace_singular_curve(cuspidal_edge(), (0.1, 0.0))
    for t in np.linspace(0.05, c.length_param() - 0.05, 9):
        assert K.classify_point(c, t) == "A2"


def test_classify_swallowtail_a3_at_origin():
    c = K.trace_singular_curve(swallowtail(), (0.15, -0.1))
    a3 = K.find_a3_points(c)
    assert len(a3) == 1
    assert np.allclose(a3[0].point, (0.0, 0.0), atol=1e-8)
    assert abs(a3[0].phi_derivative) >= 0.1
    # away from the origin everything is A2
    for t in (0.05, c.length_param() - 0.05):
        assert K.classify_point(c, t) == "A2"


def test_classify_cuspidal_cross_cap_a2_at_origin():
    c = K.trace_singular_curve(cuspidal_cross_cap(), (0.0, 0.1))
    ts = np.array([s.t for s in c.samples])
    us = np.array([s.point[0] for s in c.samples])
    t0 = float(np.interp(0.0, us, ts))
    assert K.classify_point(c, t0) == "A2"


# --- singular curvature -----------------------------------------------------------

def test_kappa_s_cuspidal_edge_vanishes():
    c = K.trace_singular_curve(cuspidal_edge(), (0.1, 0.0))
    for t in np.linspace(0.03, c.length_param() - 0.03, 50):
        assert abs(K.singular_curvature(c, t)) <= 1e-8


def test_kappa_s_normal_form():
    m = normal_form(alpha="-1 + v", beta="2")
    c = K.trace_singular_curve(m, (0.0, 0.1))
    for t in np.linspace(0.05, c.length_param() - 0.05, 7):
        assert K.singular_curvature(c, t) == pytest.approx(1.0, abs=1e-8)
    m0 = normal_form(alpha="0", beta="0")
    c0 = K.trace_singular_curve(m0, (0.0, 0.1))
    assert K.singular_curvature(c0, c0.length_param() / 2) == pytest.approx(0.0, abs=1e-10)


def test_kappa_s_orientation_invariance():
    m = normal_form(alpha="-1 + v - u^2", beta="2")
    p = (0.1, 0.0)
    a = K.kappa_s_at(m, p)
    chart_rev = K.strongly_adapted_chart(m, p, reverse=True)
    mm = pullback(m, chart_rev, check_range=False)
    jE, jF, jG = mm.jets((0.0, 0.0), 2)
    lam_v = mm.lam_jet((0.0, 0.0), 1).coeff(0, 1)
    num = (-jF.deriv(0, 1) * jE.deriv(1, 0) + 2 * jE.value * jF.deriv(1, 1)
           - jE.value * jE.deriv(0, 2))
    b = num / (2 * jE.value ** 1.5 * abs(lam_v))
    assert b == pytest.approx(a, abs=1e-8)
    # oracle: kappa_s = -alpha(u, 0) = 1 + u^2
    assert a == pytest.approx(1.0 + 0.1 ** 2, abs=1e-8)


# --- product curvature ---------------------------------------------------------------

def test_kappa_pi_normal_form():
    m = normal_form(alpha="-1 + v", beta="2")
    c = K.trace_singular_curve(m, (0.0, 0.1))
    t_mid = c.length_param() / 2
    assert K.product_curvature(c, t_mid) == pytest.approx(-2.5, abs=1e-4)

    m0 = normal_form(alpha="-1", beta="0")
    c0 = K.trace_singular_curve(m0, (0.0, 0.1))
    assert K.product_curvature(c0, c0.length_param() / 2) == pytest.approx(0.0, abs=1e-6)


def test_kappa_pi_cuspidal_cross_cap_zero_at_origin():
    m = cuspidal_cross_cap()
    assert abs(K.kappa_pi_at(m, (0.0, 0.0), scale=0.5)) <= 1e-4


def test_kappa_pi_independent_of_co_orientation_choice():
    # flipping the global lambda re-selects the compatible chart (the curve
    # orientation reverses) and the two sign changes cancel; geometrically,
    # kappa_nu and kappa_c both flip under nu -> -nu so their product cannot
    # see the choice
    E = "1 + v^2*(-1 + v)"
    G = "v^2*(1 + v*(2))"
    lam = "v*sqrt((1 + v^2*(-1 + v))*(1 + v*(2)))"
    m_plus = metric_from_exprs(E, "0", G, lam=lam,
                               domain=(-0.5, 0.5, -0.35, 0.35))
    m_minus = metric_from_exprs(E, "0", G, lam=lam,
                                domain=(-0.5, 0.5, -0.35, 0.35),
                                co_orientation_sign=-1)
    a = K.kappa_pi_at(m_plus, (0.0, 0.0), scale=0.5)
    b = K.kappa_pi_at(m_minus, (0.0, 0.0), scale=0.5)
    assert a == pytest.approx(-2.5, abs=1e-5)
    assert b == pytest.approx(a, abs=1e-9)


def test_kappa_pi_requires_a2():
    c = K.trace_singular_curve(swallowtail(), (0.15, -0.1))
    a3 = K.find_a3_points(c)[0]
    with pytest.raises(NotA2):
        K.product_curvature(c, a3.t)


# --- normalized charts / normal form ---------------------------------------------------

def test_verify_normalized_chart():
    ok, _ = K.verify_normalized_chart(normal_form(alpha="-1 + v", beta="2"))
    assert ok
    ok, res = K.verify_normalized_chart(cuspidal_edge())
    assert not ok
    ok, _ = K.verify_normalized_chart(metric_from_exprs("1", "0", "1"))
    assert not ok


def test_normal_form_invariants_examples():
    ks, kpi = K.normal_form_invariants(normal_form(alpha="-1", beta="0"))
    assert ks(0.2) == pytest.approx(1.0, abs=1e-12)
    assert kpi(0.2) == pytest.approx(0.0, abs=1e-12)

    ks, kpi = K.normal_form_invariants(normal_form(alpha="0", beta="0"))
    assert ks(0.0) == pytest.approx(0.0, abs=1e-12)
    assert kpi(0.0) == pytest.approx(0.0, abs=1e-12)

    with pytest.raises(NotNormalized):
        K.normal_form_invariants(cuspidal_edge())


def test_normal_form_two_routes_agree():
    m = normal_form(alpha="-1 + v", beta="2")
    ks, kpi = K.normal_form_invariants(m)
    assert ks(0.0) == pytest.approx(1.0, abs=1e-12)
    assert kpi(0.0) == pytest.approx(-2.5, abs=1e-12)
    # pointwise Richardson route against the closed form
    got = K.kappa_pi_at(m, (0.0, 0.0), scale=0.5)
    assert got == pytest.approx(-2.5, abs=1e-5)
    assert K.kappa_s_at(m, (0.0, 0.0)) == pytest.approx(1.0, abs=1e-9)


# --- chart invariance ------------------------------------------------------------------

def _reparam_chart(rng):
    a1 = rng.choice([-1.0, 1.0]) * rng.uniform(0.7, 1.3)
    a2 = rng.uniform(-0.15, 0.15)
    a3 = rng.uniform(-0.15, 0.15)
    b0 = rng.choice([-1.0, 1.0]) * rng.uniform(0.7, 1.3)
    b1 = rng.uniform(-0.2, 0.2)
    b2 = rng.uniform(-0.2, 0.2)
    cu = {(1, 0): a1, (2, 0): a2, (0, 2): a3}
    cv = {(0, 1): b0, (1, 1): b1, (0, 2): b2}
    return Chart(PolyMap2.from_coeff_dicts(cu, cv, 2), kind="polynomial",
                 stages=("reparam",))


def test_kappa_s_and_pi_chart_invariance():
    m = normal_form(alpha="-1 + v - u^2", beta="2 + u")
    rng = np.random.RandomState(41)
    ks_ref = K.kappa_s_at(m, (0.0, 0.0))
    kpi_ref = K.kappa_pi_at(m, (0.0, 0.0), scale=0.5)
    for _ in range(12):
        chart = _reparam_chart(rng)
        mm = pullback(m, chart, domain=(-0.15, 0.15, -0.1, 0.1), check_range=False)
        ks = K.kappa_s_at(mm, (0.0, 0.0))
        kpi = K.kappa_pi_at(mm, (0.0, 0.0), scale=0.2)
        assert ks == pytest.approx(ks_ref, abs=1e-6)
        assert abs(kpi) == pytest.approx(abs(kpi_ref), abs=1e-4)


def test_strongly_adapted_chart_axis_conditions():
    # E_v = G_v = 0 along the curve in the strongly adapted chart (admissibility)
    for m, seed in ((cuspidal_edge(), (0.1, 0.0)), (cuspidal_cross_cap(), (0.0, 0.1))):
        c = K.trace_singular_curve(m, seed)
        s = c.samples[len(c.samples) // 3]
        chart = K.strongly_adapted_chart(m, s.point, s.eta, s.tangent)
        mm = pullback(m, chart, check_range=False)
        jE, jF, jG = mm.jets((0.0, 0.0), 2)
        assert abs(jE.deriv(0, 1)) < 1e-8
        assert abs(jG.deriv(0, 1)) < 1e-8
        assert abs(jF.value) < 1e-10
        assert abs(jG.value) < 1e-10


def test_spindle_torus_cone_circles_are_other():
    # parallel of a circular-profile torus at offset between the radii: the
    # singular circles map to cone points on the axis; the null direction is
    # tangent to the curve, so every sample is "Other" and kappa_s is not
    # defined there
    f = SurfaceMap(
        x=X.parse("(2 + 2.5*cos(u))*cos(v)"),
        y=X.parse("(2 + 2.5*cos(u))*sin(v)"),
        z=X.parse("2.5*sin(u)"),
        nu=(X.parse("cos(u)*cos(v)"), X.parse("cos(u)*sin(v)"), X.parse("sin(u)")),
        domain=(0.0, 2 * np.pi, 0.0, 2 * np.pi),
        periodic_u=True, periodic_v=True)
    m = induced_metric(f)
    u0 = np.arccos(-2.0 / 2.5)
    c = K.trace_singular_curve(m, (u0 + 0.05, 1.0))
    assert c.closed
    K.profile_curve(c, with_invariants=False)
    assert all(s.cls == "Other" for s in c.samples)
    with pytest.raises(NotA2):
        K.singular_curvature(c, c.length_param() / 2)
    # cone circles have zero dsigma-length
    assert c.samples[-1].tau <= 1e-8


def test_eta_requires_positive_rank():
    from smlab.errors import RankZeroEncountered
    m = metric_from_exprs("u^2 + v^2", "u^2 + v^2", "u^2 + v^2",
                          domain=(-0.4, 0.4, -0.4, 0.4))
    with pytest.raises(RankZeroEncountered):
        K._eta_at(m, (0.0, 0.0))


def test_profile_and_csv():
    c = K.trace_singular_curve(normal_form(), (0.0, 0.1))
    prof = K.profile_curve(c)
    txt = K.curve_to_csv(prof)
    lines = txt.strip().split("\n")
    assert lines[0] == K.CSV_HEADER
    assert len(lines) == len(c.samples) + 1
    assert all(s.cls == "A2" for s in c.samples)
    mid = c.samples[len(c.samples) // 2]
    assert mid.kappa_s == pytest.approx(1.0, abs=1e-8)
    assert mid.kappa_pi == pytest.approx(-2.5, abs=1e-4)
