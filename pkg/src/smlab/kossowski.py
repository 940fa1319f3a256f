"""Singular curves of Kossowski metrics and their intrinsic invariants.

The singular set of a Kossowski metric is the regular level set lambda = 0.
This module traces it with a predictor-corrector walker, classifies points
as A2 / A3 / Other through phi(t) = det(gamma', eta), and computes the
singular curvature

    kappa_s = (-F_v E_u + 2 E F_uv - E E_vv) / (2 E^(3/2) lambda_v)

and the product curvature kappa_Pi in a curve-based strongly adapted chart
(ubar, vbar) -> gamma(ubar) + vbar * eta(ubar).  All derivatives entering
the chart come from jet differentiation of the tracing field, never from
finite differences; the only extrapolation in the module is the Richardson
ladder that evaluates the smooth product K * lambda on the curve itself.

kappa_Pi is computed pointwise as (K lambda) / (E^(1/4) lambda_v^(1/2)) in
the strongly adapted chart, which reduces to lim v K(u, v) in normalized
charts and is validated against the normal-form route in the tests.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from . import jet as J
from .charts import Chart, PolyMap2
from .errors import (DegenerateStart, ExtrapolationDiverged, NoConvergence,
                     NotA2, NotNormalized, RankZeroEncountered)
from .metric import (MetricField, _sample_grid, brioschi_batch, null_space,
                     pullback)

GUARD_FACTOR = 10.0  # kappa_s guard band around A3 points, in units of tol_cls


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------

@dataclass
class CurveSample:
    t: float
    point: tuple
    tangent: tuple
    eta: tuple
    dlam: float
    cls: str = ""            # A2 | A3 | Other, filled by classification
    kappa_s: float | None = None
    kappa_pi: float | None = None
    tau: float = 0.0
    unreliable: bool = False


@dataclass
class SingularCurve:
    metric: MetricField
    samples: list
    closed: bool
    lam_scale: float

    def length_param(self):
        return self.samples[-1].t

    def scale(self):
        pts = np.array([s.point for s in self.samples])
        ext = np.max(pts, axis=0) - np.min(pts, axis=0)
        return max(float(np.max(ext)), 1e-6)

    def tol_cls(self):
        return 1e-7 * max(self.scale(), 1.0)

    def point_at(self, t):
        """Point on the curve at parameter t (re-corrected onto lambda = 0)."""
        ts = np.array([s.t for s in self.samples])
        t = float(np.clip(t, ts[0], ts[-1]))
        i = int(np.clip(np.searchsorted(ts, t) - 1, 0, len(ts) - 2))
        t0, t1 = ts[i], ts[i + 1]
        w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
        p0 = np.array(self.samples[i].point)
        p1 = np.array(self.samples[i + 1].point)
        p = _newton_to_curve(self.metric, tuple(p0 + w * (p1 - p0)), self.lam_scale)
        eta_hint = tuple((1 - w) * np.array(self.samples[i].eta)
                         + w * np.array(self.samples[i + 1].eta))
        tan_hint = tuple((1 - w) * np.array(self.samples[i].tangent)
                         + w * np.array(self.samples[i + 1].tangent))
        return p, eta_hint, tan_hint


@dataclass
class A3Point:
    t: float
    point: tuple
    phi_derivative: float


@dataclass
class InvariantProfile:
    curve: SingularCurve
    a3_points: list = field(default_factory=list)

    def rows(self):
        return [(s.t, s.point[0], s.point[1], s.tangent[0], s.tangent[1],
                 s.eta[0], s.eta[1], s.cls, s.kappa_s, s.kappa_pi, s.tau)
                for s in self.curve.samples]


# ---------------------------------------------------------------------------
# tracing
# ---------------------------------------------------------------------------

def _lam_scale(m):
    pts = _sample_grid(m.domain, 16)
    vals = np.abs(m.lam_batch(pts))
    return max(1.0, float(np.max(vals)))


def _newton_to_curve(m, p, lam_scale, tol=1e-12, max_iter=60):
    p = np.array(p, dtype=float)
    for _ in range(max_iter):
        jet = m.lam_jet(tuple(p), 1)
        val = jet.value
        gu, gv = jet.coeff(1, 0), jet.coeff(0, 1)
        g2 = gu * gu + gv * gv
        if g2 < 1e-30:
            raise DegenerateStart(f"lambda gradient vanishes near {tuple(p)}")
        if abs(val) <= tol * lam_scale:
            return tuple(p)
        p -= val * np.array([gu, gv]) / g2
    raise NoConvergence(f"corrector did not reach the singular curve near {tuple(p)}")


def _tangent(m, p):
    jet = m.lam_jet(p, 1)
    gu, gv = jet.coeff(1, 0), jet.coeff(0, 1)
    norm = float(np.hypot(gu, gv))
    return np.array([-gv, gu]) / norm, norm


def _eta_at(m, p, hint=None):
    rank, dirs = null_space(m, p)
    if rank == 0:
        raise RankZeroEncountered(f"metric rank 0 at {tuple(p)}")
    if rank == 2:
        # borderline corrector tolerance: fall back to the small-eigenvector
        mat = m.matrix(p)
        w, vecs = np.linalg.eigh(mat)
        d = vecs[:, 0]
    else:
        d = np.array(dirs[0])
    if hint is not None and np.dot(d, hint) < 0:
        d = -d
    return d


def trace_singular_curve(m: MetricField, seed, step=None, max_steps=4000) -> SingularCurve:
    """Predictor-corrector trace of lambda = 0 through the Newton basin of seed."""
    if m.lam is None:
        raise ValueError("curve tracing requires a metric with a lambda field")
    lam_scale = _lam_scale(m)
    jet0 = m.lam_jet(seed, 1)
    if np.hypot(jet0.coeff(1, 0), jet0.coeff(0, 1)) < 1e-8:
        raise DegenerateStart(f"|d lambda| < 1e-8 at seed {tuple(seed)}")
    start = _newton_to_curve(m, seed, lam_scale)

    ext_u, ext_v = m.extents()
    h0 = step or min(ext_u, ext_v) / 200.0
    h_max = 4.0 * h0
    h_min = h0 / 64.0

    def walk(direction):
        samples = []
        p = np.array(start)
        T, norm = _tangent(m, tuple(p))
        T = direction * T
        h = h0
        closed = False
        t_acc = 0.0
        for _ in range(max_steps):
            samples.append((t_acc, tuple(p), tuple(T), norm))
            while True:
                q = p + h * T
                q, exited = _clamp_step(m, p, q)
                try:
                    qc = np.array(_newton_to_curve(m, tuple(q), lam_scale))
                except (NoConvergence, DegenerateStart):
                    if h <= h_min:
                        raise
                    h = max(h / 2, h_min)
                    continue
                Tq, norm_q = _tangent(m, tuple(qc))
                if np.dot(Tq, T) < 0:
                    Tq = -Tq
                turn = float(np.arccos(np.clip(np.dot(Tq, T), -1.0, 1.0)))
                if turn > 0.1 and h > h_min and not exited:
                    h = max(h / 2, h_min)
                    continue
                break
            t_acc += float(np.linalg.norm(qc - p))
            p, T, norm = qc, Tq, norm_q
            if turn < 0.03:
                h = min(h * 1.4, h_max)
            if exited:
                samples.append((t_acc, tuple(p), tuple(T), norm))
                break
            if len(samples) >= 5:
                d = m.wrapped_delta(start, tuple(p))
                if np.linalg.norm(d) < max(h, h0) / 2 and np.dot(T, samples[0][2]) > 0.9:
                    closed = True
                    # close the loop at the start point, continued without wrapping
                    samples.append((t_acc + float(np.linalg.norm(d)),
                                    tuple(np.array(p) + d),
                                    tuple(samples[0][2]), samples[0][3]))
                    break
        else:
            raise NoConvergence("curve tracing exceeded the step budget")
        return samples, closed

    fwd, closed = walk(+1.0)
    if closed:
        raw = fwd
    else:
        bwd, _ = walk(-1.0)
        # backward samples travel against the forward orientation
        rev = [(-t, pt, (-tu, -tv), nn) for (t, pt, (tu, tv), nn) in bwd[1:]]
        rev.reverse()
        raw = rev + fwd
        t_shift = -raw[0][0]
        raw = [(t + t_shift, pt, tan, nn) for (t, pt, tan, nn) in raw]

    curve = SingularCurve(metric=m, samples=[], closed=closed, lam_scale=lam_scale)
    eta_hint = None
    for (t, pt, tan, nn) in raw:
        eta = _eta_at(m, pt, eta_hint)
        eta_hint = eta
        curve.samples.append(CurveSample(t=t, point=pt, tangent=tan, eta=tuple(eta), dlam=nn))
    _fill_tau(curve)
    _check_curve_invariants(curve)
    return curve


def _check_curve_invariants(curve):
    m = curve.metric
    prev_eta = None
    for s in curve.samples:
        if abs(m.lam.value(m.wrap(s.point))) > 1e-10 * curve.lam_scale:
            raise NoConvergence(f"sample off the curve at {s.point}")
        if not s.dlam > 0:
            raise DegenerateStart(f"d lambda vanishes on the curve at {s.point}")
        if prev_eta is not None and np.dot(prev_eta, s.eta) <= 0:
            raise NoConvergence(f"null direction flips orientation at {s.point}")
        prev_eta = s.eta


def _clamp_step(m, p, q):
    """Shorten a predictor step that leaves a non-periodic domain edge."""
    u0, u1, v0, v1 = m.domain
    s = 1.0
    exited = False
    for axis, periodic, lo, hi in ((0, m.periodic_u, u0, u1), (1, m.periodic_v, v0, v1)):
        if periodic:
            continue
        d = q[axis] - p[axis]
        if q[axis] > hi and d > 0:
            s = min(s, (hi - p[axis]) / d)
            exited = True
        elif q[axis] < lo and d < 0:
            s = min(s, (lo - p[axis]) / d)
            exited = True
    if exited:
        return p + max(s, 0.0) * (q - p), True
    return q, False


def _fill_tau(curve):
    m = curve.metric
    tau = 0.0
    prev = None
    for s in curve.samples:
        if prev is not None:
            tau += _segment_dsigma_length(m, prev, s)
        s.tau = tau
        prev = s


def _segment_dsigma_length(m, s0, s1):
    # 4-point Gauss along the chord; the tangent is the chord direction
    nodes, weights = np.polynomial.legendre.leggauss(4)
    p0 = np.array(s0.point)
    p1 = np.array(s1.point)
    d = p1 - p0
    pts = p0[None, :] + 0.5 * (nodes[:, None] + 1) * d[None, :]
    aE, aF, aG = m.jets_batch(pts, 0)
    q = (aE[:, 0] * d[0] ** 2 + 2 * aF[:, 0] * d[0] * d[1] + aG[:, 0] * d[1] ** 2)
    return float(0.5 * np.sum(weights * np.sqrt(np.maximum(q, 0.0))))


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def _phi_fields(m, p, eta_hint, tan_hint=None):
    """Jets of the unit tangent field T and unit null field N at p, plus
    phi = det(T, N) as a jet."""
    order = min(m.jet_order, J.MAX_ORDER) - 1
    lam_jet = m.lam_jet(p, order + 1)
    gu = lam_jet.d_du()
    gv = lam_jet.d_dv()
    norm = (gu * gu + gv * gv).sqrt()
    Tu = -gv / norm
    Tv = gu / norm
    if tan_hint is not None and Tu.value * tan_hint[0] + Tv.value * tan_hint[1] < 0:
        Tu, Tv = -Tu, -Tv
    jE, jF, jG = m.jets(p, order)
    if jE.value >= jG.value:
        wu, wv = -jF, jE
    else:
        wu, wv = jG, -jF
    wn = (wu * wu + wv * wv).sqrt()
    Nu, Nv = wu / wn, wv / wn
    if eta_hint is not None and Nu.value * eta_hint[0] + Nv.value * eta_hint[1] < 0:
        Nu, Nv = -Nu, -Nv
    phi = Tu * Nv - Tv * Nu
    dphi = Tu.value * phi.deriv(1, 0) + Tv.value * phi.deriv(0, 1)
    return (Tu, Tv), (Nu, Nv), phi, dphi


def classify_at(m, p, eta_hint=None, tan_hint=None, tol_cls=1e-7):
    _, _, phi, dphi = _phi_fields(m, p, eta_hint, tan_hint)
    if abs(phi.value) > tol_cls:
        return "A2", phi.value, dphi
    if abs(dphi) > tol_cls:
        return "A3", phi.value, dphi
    return "Other", phi.value, dphi


def classify_point(c: SingularCurve, t: float) -> str:
    """A2 / A3 / Other at curve parameter t."""
    p, eta_hint, tan_hint = c.point_at(t)
    cls, _, _ = classify_at(c.metric, p, eta_hint, tan_hint, c.tol_cls())
    return cls


def find_a3_points(c: SingularCurve):
    """Zeros of phi along the curve with nonzero first-order crossing."""
    m = c.metric
    tol = c.tol_cls()
    phis = []
    for s in c.samples:
        _, _, phi, dphi = _phi_fields(m, s.point, s.eta, s.tangent)
        phis.append((s.t, phi.value, dphi))
    out = []
    for i in range(len(phis) - 1):
        t0, f0, d0 = phis[i]
        t1, f1, _ = phis[i + 1]
        if f0 == 0.0 or f0 * f1 < 0:
            t = t0 if f0 == 0.0 else t0 + (t1 - t0) * f0 / (f0 - f1)
            for _ in range(40):
                p, eta_hint, tan_hint = c.point_at(t)
                _, _, phi, dphi = _phi_fields(m, p, eta_hint, tan_hint)
                if abs(phi.value) < 1e-14 * max(1.0, abs(dphi)) or dphi == 0.0:
                    break
                t -= phi.value / dphi
            p, eta_hint, tan_hint = c.point_at(t)
            _, _, phi, dphi = _phi_fields(m, p, eta_hint, tan_hint)
            if abs(phi.value) <= tol and abs(dphi) > tol:
                if not any(abs(a.t - t) < 1e-6 * max(1.0, c.length_param()) for a in out):
                    out.append(A3Point(t=float(t), point=p, phi_derivative=float(dphi)))
    return out


def profile_curve(c: SingularCurve, with_kappa_pi=None, with_invariants=True) -> InvariantProfile:
    """Classify every sample and fill kappa_s / kappa_pi where defined."""
    m = c.metric
    tol = c.tol_cls()
    if with_kappa_pi is None:
        with_kappa_pi = m.lam is not None
    for s in c.samples:
        cls, phi, dphi = classify_at(m, s.point, s.eta, s.tangent, tol)
        s.cls = cls
        if cls == "A2" and abs(phi) > GUARD_FACTOR * tol:
            if with_invariants:
                s.kappa_s = kappa_s_at(m, s.point, s.eta, s.tangent)
                if with_kappa_pi:
                    try:
                        s.kappa_pi = kappa_pi_at(m, s.point, s.eta, s.tangent,
                                                 scale=c.scale())
                    except ExtrapolationDiverged:
                        s.kappa_pi = None
                        s.unreliable = True
        else:
            s.unreliable = cls == "A2"
    return InvariantProfile(curve=c, a3_points=find_a3_points(c))


# ---------------------------------------------------------------------------
# the strongly adapted curve chart
# ---------------------------------------------------------------------------

def _uni_to_tri(c, order):
    out = np.zeros(J.size(order))
    for k in range(min(len(c) - 1, order) + 1):
        out[J.index_of(k, 0)] = c[k]
    return out


def _compose_univariate(jet, pu, pv, order):
    """Coefficients of jet(gamma(s)) with gamma given by univariate Taylor
    polynomials pu, pv around jet's base point."""
    wu = np.array(pu[: order + 1], dtype=float)
    wv = np.array(pv[: order + 1], dtype=float)
    wu = np.pad(wu, (0, order + 1 - len(wu)))
    wv = np.pad(wv, (0, order + 1 - len(wv)))
    wu[0] -= jet.point[0]
    wv[0] -= jet.point[1]
    res = J._poly_apply(jet.coeffs[None, : J.size(order)],
                        _uni_to_tri(wu, order)[None, :],
                        _uni_to_tri(wv, order)[None, :], order)[0]
    return np.array([res[J.index_of(k, 0)] for k in range(order + 1)])


def _flow_taylor(Tu, Tv, p, order):
    """Taylor coefficients of the integral curve of (Tu, Tv) through p."""
    pu = np.zeros(order + 1)
    pv = np.zeros(order + 1)
    pu[0], pv[0] = p
    for k in range(order):
        tu = _compose_univariate(Tu, pu, pv, k)
        tv = _compose_univariate(Tv, pu, pv, k)
        pu[k + 1] = tu[k] / (k + 1)
        pv[k + 1] = tv[k] / (k + 1)
    return pu, pv


def strongly_adapted_chart(m: MetricField, p, eta_hint=None, tan_hint=None,
                           reverse=False):
    """Curve-based strongly adapted chart at an A2 point p of the singular set.

    The u-axis follows the singular curve (unit-speed in the uv-plane) and
    d/dv is the null direction along it.  Raises NotA2 when the chart
    degenerates, reporting |det(T, eta)|.
    """
    order = min(m.jet_order, J.MAX_ORDER)
    (Tu, Tv), (Nu, Nv), phi, _ = _phi_fields(m, p, eta_hint, tan_hint)
    if abs(phi.value) < 1e-10:
        raise NotA2("null direction tangent to the singular curve", margin=abs(phi.value))
    if reverse:
        Tu, Tv = -Tu, -Tv
    pu, pv = _flow_taylor(Tu, Tv, p, order)
    eu = _compose_univariate(Nu, pu, pv, order - 1)
    ev = _compose_univariate(Nv, pu, pv, order - 1)
    cu = {(k, 0): pu[k] for k in range(order + 1)}
    cv = {(k, 0): pv[k] for k in range(order + 1)}
    for k in range(order):
        cu[(k, 1)] = eu[k]
        cv[(k, 1)] = ev[k]
    pmap = PolyMap2.from_coeff_dicts(cu, cv, order)
    return Chart(pmap, kind="curve", stages=("curve-adapted",))


def _chart_invariant_data(m, p, eta_hint=None, tan_hint=None, reverse=False):
    chart = strongly_adapted_chart(m, p, eta_hint, tan_hint, reverse)
    mm = pullback(m, chart, check_range=False)
    jE, jF, jG = mm.jets((0.0, 0.0), 2)
    lam_v = None
    if m.lam is not None:
        lam_v = mm.lam_jet((0.0, 0.0), 1).coeff(0, 1)
    return chart, mm, (jE, jF, jG), lam_v


def kappa_s_at(m: MetricField, p, eta_hint=None, tan_hint=None) -> float:
    """Singular curvature at an A2 point (any Kossowski metric with lambda)."""
    _, _, (jE, jF, jG), lam_v = _chart_invariant_data(m, p, eta_hint, tan_hint)
    if lam_v is None:
        raise ValueError("kappa_s requires a lambda field")
    E = jE.value
    num = (-jF.deriv(0, 1) * jE.deriv(1, 0)
           + 2 * E * jF.deriv(1, 1)
           - E * jE.deriv(0, 2))
    return num / (2.0 * E ** 1.5 * abs(lam_v))


def neville_to_zero(hs, fs):
    """Polynomial extrapolation of f(h) to h = 0; returns (value, err_estimate)."""
    tab = [list(fs)]
    n = len(fs)
    for mcol in range(1, n):
        prev = tab[-1]
        cur = []
        for i in range(n - mcol):
            cur.append((hs[i + mcol] * prev[i] - hs[i] * prev[i + 1])
                       / (hs[i + mcol] - hs[i]))
        tab.append(cur)
    best = tab[-1][0]
    prev_best = tab[-2][0] if n >= 2 else best
    return best, abs(best - prev_best)


def _kl_ladder(m, chart, h0, depth=6, rel_tol=1e-4):
    """Richardson extrapolation of h -> K(c(0,h)) lambda(c(0,h)) J(0,h)."""
    hs = h0 * 0.5 ** np.arange(depth)
    pts_chart = np.stack([np.zeros(depth), hs], axis=-1)
    pts = chart.pmap.value_batch(pts_chart)
    aE, aF, aG = m.jets_batch(pts, 2)
    K, _ = brioschi_batch(aE, aF, aG)
    lam = m.lam_batch(pts)
    jdet = np.array([np.linalg.det(chart.pmap.jacobian((0.0, h))) for h in hs])
    fs = K * lam * jdet
    if not np.all(np.isfinite(fs)):
        raise ExtrapolationDiverged("K*lambda not finite on the extrapolation ladder")
    val, err = neville_to_zero(hs, fs)
    if err > rel_tol * max(1.0, abs(val)):
        raise ExtrapolationDiverged(
            f"K*lambda ladder error {err:.2e} exceeds {rel_tol:.0e} (value {val:.6e})")
    return val


def kappa_pi_at(m: MetricField, p, eta_hint=None, tan_hint=None, scale=1.0,
                h0=None, depth=6) -> float:
    """Product curvature at an A2 point of a co-oriented Kossowski metric.

    Signed with respect to the lambda that the metric carries; the chart is
    orientation-corrected so that the transformed lambda has positive
    v-derivative (the compatible convention).
    """
    if m.lam is None:
        raise ValueError("kappa_pi requires a lambda field")
    chart, mm, (jE, jF, jG), lam_v = _chart_invariant_data(m, p, eta_hint, tan_hint)
    sign = 1.0
    if lam_v < 0:
        # reversing the curve orientation makes the chart compatible; the
        # ladder value flips with it
        sign = -1.0
        lam_v = -lam_v
    h0 = h0 or 1e-2 * scale
    h0 = _shrink_into_domain(m, p, chart, h0)
    kl = sign * _kl_ladder(m, chart, h0, depth)
    return kl / (jE.value ** 0.25 * lam_v ** 0.5)


def _shrink_into_domain(m, p, chart, h0):
    u0, u1, v0, v1 = m.domain
    for _ in range(40):
        q = m.wrap(chart.value((0.0, h0))) if (m.periodic_u or m.periodic_v) \
            else chart.value((0.0, h0))
        if m.contains(q):
            return h0
        h0 /= 2
    raise ExtrapolationDiverged("could not fit the extrapolation ladder inside the domain")


def singular_curvature(c: SingularCurve, t: float) -> float:
    """kappa_s at curve parameter t (requires an A2 point)."""
    p, eta_hint, tan_hint = c.point_at(t)
    cls, phi, _ = classify_at(c.metric, p, eta_hint, tan_hint, c.tol_cls())
    if cls != "A2":
        raise NotA2(f"point at t={t} is {cls}", margin=abs(phi))
    return kappa_s_at(c.metric, p, eta_hint, tan_hint)


def product_curvature(c: SingularCurve, t: float) -> float:
    """kappa_pi at curve parameter t (requires an A2 point and lambda)."""
    p, eta_hint, tan_hint = c.point_at(t)
    cls, phi, _ = classify_at(c.metric, p, eta_hint, tan_hint, c.tol_cls())
    if cls != "A2":
        raise NotA2(f"point at t={t} is {cls}", margin=abs(phi))
    return kappa_pi_at(c.metric, p, eta_hint, tan_hint, scale=c.scale())


# ---------------------------------------------------------------------------
# normalized charts and the normal form
# ---------------------------------------------------------------------------

def verify_normalized_chart(m: MetricField, n_axis=21, tol=1e-8):
    """Check E(u,0)=1, G(u,0)=0, G_vv(u,0)=2 and F == 0 on a v-collar."""
    u0, u1, v0, v1 = m.domain
    us = np.linspace(u0, u1, n_axis + 2)[1:-1]
    axis_pts = np.stack([us, np.zeros_like(us)], axis=-1)
    aE, aF, aG = m.jets_batch(axis_pts, 2)
    res_E = float(np.max(np.abs(aE[:, 0] - 1.0)))
    res_G_axis = float(np.max(np.abs(aG[:, 0])))
    res_Gvv = float(np.max(np.abs(2.0 * aG[:, J.index_of(0, 2)] - 2.0)))
    collar = 0.1 * (v1 - v0)
    vs = np.linspace(-collar, collar, 9)
    uu, vv = np.meshgrid(us, vs, indexing="ij")
    pts = np.stack([uu.ravel(), vv.ravel()], axis=-1)
    res_F = float(np.max(np.abs(m.F.value_batch(pts))))
    residuals = {"E_axis": res_E, "G_axis": res_G_axis, "G_vv": res_Gvv, "F_collar": res_F}
    ok = all(r <= tol for r in residuals.values())
    return ok, residuals


def normal_form_invariants(m: MetricField):
    """kappa_s(u) and kappa_pi(u) profiles for a metric already given in a
    normalized chart (1 + v^2 alpha) du^2 + v^2 (1 + v beta) dv^2."""
    ok, residuals = verify_normalized_chart(m)
    if not ok:
        raise NotNormalized(f"chart is not normalized: residuals {residuals}")

    def at(u):
        jE = m.E.jet((u, 0.0), 3)
        jG = m.G.jet((u, 0.0), 3)
        alpha = jE.deriv(0, 2) / 2.0
        alpha_v = jE.deriv(0, 3) / 6.0
        beta = jG.deriv(0, 3) / 6.0
        return -alpha, (alpha * beta - 3.0 * alpha_v) / 2.0

    return (lambda u: at(u)[0]), (lambda u: at(u)[1])


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

CSV_HEADER = "t,u,v,tangent_u,tangent_v,eta_u,eta_v,class,kappa_s,kappa_pi,tau"


def curve_to_csv(profile: InvariantProfile) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for row in profile.rows():
        cells = []
        for x in row:
            if x is None:
                cells.append("")
            elif isinstance(x, str):
                cells.append(x)
            else:
                cells.append(format(float(x), ".17g"))
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()
