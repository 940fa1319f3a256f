"""Intrinsic cross caps and their invariants.

An intrinsic cross cap is an isolated rank-one degenerate point of an
admissible metric where delta = EG - F^2 has a non-degenerate minimum at
value zero.  The invariants alpha02, alpha11, alpha20 are read off after a
staged sequence of coordinate changes:

    null-align (affine, J = 1)        null direction becomes d/dv
    adapted (quadratic)               E(0)=1, dE = dF = dG = 0
    first-level (v-rescale)           G_vv(0) = 2 alpha02^2
    second-level (shear)              det[[F_uu-E_uv/2, G_uv],
                                           [F_uv-E_vv/2, G_vv]] = 0
    West cubic (optional)             all nine second-order coefficients
                                      match the West-form expansions

Stage constants are solved numerically from pullback jets (the defining
conditions are affine in them) and every stage ends with a post-assertion
of the conditions it established; the post-assertions, not the solver, are
the correctness contract.

Convention: second derivatives are meant literally, so the West expansion
F = alpha11 alpha20 u^2 + ... corresponds to F_uu(0,0) = 2 alpha11 alpha20.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jet as J
from .charts import Chart, PolyMap2
from .errors import (DegenerateGHessian, ExtrapolationDiverged, NotCrossCap,
                     SolveFailed)
from .kossowski import neville_to_zero
from .metric import (MetricField, admissibility_check, brioschi_batch,
                     null_space, pullback)

POST_TOL_ADAPTED = 1e-10
POST_TOL_WEST = 1e-9


@dataclass
class CrossCapReport:
    location: tuple
    hess: float
    delta3: float          # the 3x3 determinant Delta in the aligned chart
    alpha02: float
    alpha11: float
    alpha20: float
    residual_hess_4edelta: float
    residual_a1_2: float
    residual_FE2: float
    alpha11_signed: bool
    chart_stack: list = field(default_factory=list)

    def to_dict(self):
        return {
            "location": list(self.location),
            "hess": self.hess,
            "delta": self.delta3,
            "alpha02": self.alpha02,
            "alpha11": self.alpha11,
            "alpha20": self.alpha20,
            "residual_hess_4edelta": self.residual_hess_4edelta,
            "residual_a1_2": self.residual_a1_2,
            "residual_FE2": self.residual_FE2,
            "alpha11_signed": self.alpha11_signed,
            "chart_stack": self.chart_stack,
        }


# ---------------------------------------------------------------------------
# detection
# ---------------------------------------------------------------------------

def _delta_jet(m, p, order=2):
    jE, jF, jG = m.jets(p, order)
    return jE * jG - jF * jF


def detect_cross_caps(m: MetricField, grid=(64, 64)):
    """Newton search on grad(delta) from grid local minima.

    Accepted points have delta ~ 0, positive definite delta-Hessian and
    one-dimensional null space; the result is deduplicated and sorted.
    """
    nu, nv = grid
    u0, u1, v0, v1 = m.domain
    us = np.linspace(u0, u1, nu, endpoint=not m.periodic_u)
    vs = np.linspace(v0, v1, nv, endpoint=not m.periodic_v)
    uu, vv = np.meshgrid(us, vs, indexing="ij")
    pts = np.stack([uu.ravel(), vv.ravel()], axis=-1)
    delta = m.delta_batch(pts).reshape(nu, nv)
    scale = max(1e-300, float(np.max(np.abs(delta))))

    cell = np.array([(u1 - u0) / nu, (v1 - v0) / nv])
    seeds = _grid_minima(delta, m.periodic_u, m.periodic_v, 0.9 * scale)
    found = []
    for (i, iv) in seeds:
        p = np.array([us[i], vs[iv]])
        ok = True
        for _ in range(40):
            dj = _delta_jet(m, tuple(p), 2)
            g = np.array([dj.deriv(1, 0), dj.deriv(0, 1)])
            H = np.array([[dj.deriv(2, 0), dj.deriv(1, 1)],
                          [dj.deriv(1, 1), dj.deriv(0, 2)]])
            if abs(np.linalg.det(H)) < 1e-14 * scale * scale:
                ok = False
                break
            step = np.linalg.solve(H, -g)
            norm = np.linalg.norm(step / cell)
            if norm > 2.0:
                step *= 2.0 / norm
            p = p + step
            if np.linalg.norm(g) < 1e-14 * scale:
                break
        if not ok or not m.contains(m.wrap(tuple(p)), margin=1e-6):
            continue
        p = m.wrap(tuple(p))
        dj = _delta_jet(m, p, 2)
        hess = dj.deriv(2, 0) * dj.deriv(0, 2) - dj.deriv(1, 1) ** 2
        if dj.value > 1e-12 * scale:
            continue
        if not (dj.deriv(2, 0) > 0 and hess > 1e-8 * scale * scale):
            continue
        rank, _ = null_space(m, p)
        if rank != 1:
            continue
        if any(np.linalg.norm(m.wrapped_delta(p, q[0])) < 1e-6 for q in found):
            continue
        found.append((p, float(hess)))
    found.sort(key=lambda pair: (pair[0][0], pair[0][1]))
    return found


def _grid_minima(delta, periodic_u, periodic_v, cap):
    nu, nv = delta.shape
    out = []
    for i in range(nu):
        for jv in range(nv):
            val = delta[i, jv]
            if val > cap:
                continue
            best = True
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    if di == dj == 0:
                        continue
                    ii, jj = i + di, jv + dj
                    if periodic_u:
                        ii %= nu
                    if periodic_v:
                        jj %= nv
                    if 0 <= ii < nu and 0 <= jj < nv and delta[ii, jj] < val:
                        best = False
                        break
                if not best:
                    break
            if best:
                out.append((i, jv))
    return out


# ---------------------------------------------------------------------------
# chart stages
# ---------------------------------------------------------------------------

def _null_align_chart(m, p):
    rank, dirs = null_space(m, p)
    if rank != 1:
        raise NotCrossCap(f"metric rank at {tuple(p)} is {rank}, not 1")
    n = np.array(dirs[0])
    w = np.array([n[1], -n[0]])  # det[w n] = +1
    return Chart.affine(np.column_stack([w, n]), offset=tuple(p), name="null-align")


def _second_derivs(jet):
    return jet.deriv(2, 0), jet.deriv(1, 1), jet.deriv(0, 2)


def cross_cap_alpha02(m: MetricField, p):
    """(alpha02, Delta, alpha) at a detected intrinsic cross cap."""
    chart = _null_align_chart(m, p)
    mm = pullback(m, chart, check_range=False)
    jE, jF, jG = mm.jets((0.0, 0.0), 2)
    E0 = jE.value
    Fu, Fv = jF.deriv(1, 0), jF.deriv(0, 1)
    Guu, Guv, Gvv = _second_derivs(jG)
    alpha = E0 * Gvv / 2.0 - Fv * Fv
    Delta = np.linalg.det(np.array([
        [E0, Fu, Fv],
        [Fu, Guu / 2.0, Guv / 2.0],
        [Fv, Guv / 2.0, Gvv / 2.0]]))
    if E0 <= 0 or alpha <= 0 or Delta <= 0:
        raise NotCrossCap(f"point {tuple(p)} fails the positivity of alpha/Delta")
    alpha02 = np.sqrt(E0) * alpha ** 1.5 / Delta
    return float(alpha02), float(Delta), float(alpha)


def _hess_delta(mm):
    dj = _delta_jet(mm, (0.0, 0.0), 2)
    return dj.deriv(2, 0) * dj.deriv(0, 2) - dj.deriv(1, 1) ** 2


def build_adapted_chart(m: MetricField, p) -> Chart:
    """Affine null alignment composed with the quadratic change that makes
    the chart adapted: E(0) = 1 and dE = dF = dG = 0."""
    rep = admissibility_check(m, [tuple(p)])
    if not rep.admissible:
        raise NotCrossCap(
            f"point {tuple(p)} is not an admissible singularity "
            f"(max |Gamma| = {rep.max_abs:.3e})")
    align = _null_align_chart(m, p)
    m1 = pullback(m, align, check_range=False)
    e0 = m1.jets((0.0, 0.0), 0)[0].value
    c1 = 1.0 / np.sqrt(e0)

    def quad_chart(c11, c12, c22):
        cu = {(1, 0): c1, (2, 0): c11, (1, 1): c12, (0, 2): c22}
        cv = {(0, 1): 1.0}
        return Chart(PolyMap2.from_coeff_dicts(cu, cv, 2), kind="polynomial",
                     stages=("adapted-quadratic",))

    def residuals(c11, c12, c22):
        mm = pullback(m1, quad_chart(c11, c12, c22), check_range=False)
        jE, jF, _ = mm.jets((0.0, 0.0), 1)
        return np.array([jE.deriv(1, 0), jE.deriv(0, 1), jF.deriv(0, 1)])

    r0 = residuals(0.0, 0.0, 0.0)
    cols = [residuals(*unit) - r0 for unit in ((1, 0, 0), (0, 1, 0), (0, 0, 1))]
    M = np.column_stack(cols)
    try:
        sol = np.linalg.solve(M, -r0)
    except np.linalg.LinAlgError as exc:
        raise SolveFailed(f"adapted-chart system is singular: {exc}") from exc
    chart = align.compose(quad_chart(*sol))
    _assert_adapted(pullback(m, chart, check_range=False), POST_TOL_ADAPTED)
    return chart


def _assert_adapted(mm, tol):
    jE, jF, jG = mm.jets((0.0, 0.0), 1)
    conds = {
        "E(0)-1": jE.value - 1.0,
        "E_u": jE.deriv(1, 0), "E_v": jE.deriv(0, 1),
        "F_u": jF.deriv(1, 0), "F_v": jF.deriv(0, 1),
        "G_u": jG.deriv(1, 0), "G_v": jG.deriv(0, 1),
        "F(0)": jF.value, "G(0)": jG.value,
    }
    bad = {k: v for k, v in conds.items() if abs(v) > tol}
    if bad:
        raise SolveFailed(f"adapted-chart post-assertion failed: {bad}")


def level_adjust(m_adapted: MetricField, p=(0.0, 0.0)) -> Chart:
    """First-level v-rescale followed by the second-level shear, as one chart
    (from second-level coordinates into the adapted ones)."""
    jE, jF, jG = m_adapted.jets(p, 2)
    Gvv = jG.deriv(0, 2)
    if Gvv <= 0:
        raise NotCrossCap("G_vv(0) must be positive in the adapted chart")
    alpha02 = (Gvv / 2.0) ** 1.5 / _delta3_adapted(jF, jG)
    k = (2.0 * alpha02 ** 2 / Gvv) ** 0.25
    scale = Chart.affine(np.diag([1.0, k]), name="first-level-scale")
    m2 = pullback(m_adapted, scale, check_range=False)

    def det2(mm):
        jE2, jF2, jG2 = mm.jets((0.0, 0.0), 2)
        a = jF2.deriv(2, 0) - jE2.deriv(1, 1) / 2.0
        b = jG2.deriv(1, 1)
        c = jF2.deriv(1, 1) - jE2.deriv(0, 2) / 2.0
        d = jG2.deriv(0, 2)
        return a * d - b * c

    def shear_chart(c):
        return Chart(PolyMap2.from_coeff_dicts({(1, 0): 1.0}, {(0, 1): 1.0, (1, 0): c}, 1),
                     kind="affine", stages=("second-level-shear",))

    d0 = det2(m2)
    d1 = det2(pullback(m2, shear_chart(1.0), check_range=False))
    slope = d1 - d0  # equals the G-Hessian determinant, 4*Delta
    if abs(slope) < 1e-12 * max(1.0, abs(d0)):
        raise DegenerateGHessian("G-Hessian determinant vanishes at the cross cap")
    c = -d0 / slope
    chart = scale.compose(shear_chart(c))
    mfinal = pullback(m_adapted, chart, check_range=False)
    jEf, jFf, jGf = mfinal.jets((0.0, 0.0), 2)
    if abs(jGf.deriv(0, 2) - 2.0 * alpha02 ** 2) > 1e-10 * max(1.0, alpha02 ** 2):
        raise SolveFailed("first-level post-assertion failed")
    if abs(det2(mfinal)) > 1e-10 * max(1.0, abs(slope)):
        raise SolveFailed("second-level post-assertion failed")
    return chart


def _delta3_adapted(jF, jG):
    # Delta in an adapted chart: E=1, F_u = F_v = 0
    Guu, Guv, Gvv = _second_derivs(jG)
    return (Guu * Gvv - Guv ** 2) / 4.0


def _invariants_from_second_level(mm):
    jE, jF, jG = mm.jets((0.0, 0.0), 2)
    Gvv = jG.deriv(0, 2)
    alpha02 = np.sqrt(Gvv / 2.0)
    alpha11 = jG.deriv(1, 1) / (2.0 * alpha02)
    alpha20 = (jF.deriv(1, 1) - jE.deriv(0, 2) / 2.0) / alpha02
    res_a12 = abs(jG.deriv(2, 0) - 2.0 * (1.0 + alpha11 ** 2))
    res_fe2 = abs(jF.deriv(2, 0) - jE.deriv(1, 1) / 2.0 - alpha11 * alpha20)
    return alpha02, alpha11, alpha20, res_a12, res_fe2


def west_chart(m_second: MetricField, p=(0.0, 0.0)) -> Chart:
    """Cubic change matching the four adjustable second-order coefficients of
    the West expansion; the remaining five must then hold automatically."""
    alpha02, alpha11, alpha20, _, _ = _invariants_from_second_level(m_second)
    targets = np.array([
        2.0 * alpha20 ** 2,                       # E_uu
        2.0 * alpha11 * alpha20,                  # F_uu
        1.0 + alpha11 ** 2 + alpha02 * alpha20,   # F_uv
        2.0 * alpha02 * alpha11,                  # F_vv
    ])

    def cubic_chart(c30, c21, c12, c03):
        cu = {(1, 0): 1.0, (3, 0): c30, (2, 1): c21, (1, 2): c12, (0, 3): c03}
        cv = {(0, 1): 1.0}
        return Chart(PolyMap2.from_coeff_dicts(cu, cv, 3), kind="polynomial",
                     stages=("west-cubic",))

    def residuals(*cs):
        mm = pullback(m_second, cubic_chart(*cs), check_range=False)
        jE, jF, _ = mm.jets((0.0, 0.0), 2)
        got = np.array([jE.deriv(2, 0), jF.deriv(2, 0), jF.deriv(1, 1), jF.deriv(0, 2)])
        return got - targets

    r0 = residuals(0.0, 0.0, 0.0, 0.0)
    eye = np.eye(4)
    M = np.column_stack([residuals(*eye[i]) - r0 for i in range(4)])
    try:
        sol = np.linalg.solve(M, -r0)
    except np.linalg.LinAlgError as exc:
        raise SolveFailed(f"west-chart system is singular: {exc}") from exc
    chart = cubic_chart(*sol)
    _assert_west(pullback(m_second, chart, check_range=False),
                 alpha02, alpha11, alpha20)
    return chart


def _assert_west(mm, alpha02, alpha11, alpha20, tol=POST_TOL_WEST):
    jE, jF, jG = mm.jets((0.0, 0.0), 2)
    want = {
        "E_uu": (jE.deriv(2, 0), 2 * alpha20 ** 2),
        "E_uv": (jE.deriv(1, 1), 2 * alpha11 * alpha20),
        "E_vv": (jE.deriv(0, 2), 2 * (1 + alpha11 ** 2)),
        "F_uu": (jF.deriv(2, 0), 2 * alpha11 * alpha20),
        "F_uv": (jF.deriv(1, 1), 1 + alpha11 ** 2 + alpha02 * alpha20),
        "F_vv": (jF.deriv(0, 2), 2 * alpha02 * alpha11),
        "G_uu": (jG.deriv(2, 0), 2 * (1 + alpha11 ** 2)),
        "G_uv": (jG.deriv(1, 1), 2 * alpha02 * alpha11),
        "G_vv": (jG.deriv(0, 2), 2 * alpha02 ** 2),
    }
    bad = {k: (got, exp) for k, (got, exp) in want.items() if abs(got - exp) > tol}
    if bad:
        raise SolveFailed(f"west-chart post-assertion failed: {bad}")


# ---------------------------------------------------------------------------
# the full pipeline
# ---------------------------------------------------------------------------

def cross_cap_pipeline(m: MetricField, p, include_west=False):
    """Chart stack and pulled-back metrics for one cross cap."""
    align = _null_align_chart(m, p)
    m_aligned = pullback(m, align, check_range=False)
    adapted = build_adapted_chart(m, p)
    m_adapted = pullback(m, adapted, check_range=False)
    level = level_adjust(m_adapted)
    chart2 = adapted.compose(level)
    m_second = pullback(m, chart2, check_range=False)
    stack = [("null-align", align), ("adapted", adapted), ("level-1+2", chart2)]
    m_west = None
    if include_west:
        west = west_chart(m_second)
        chart3 = chart2.compose(west)
        m_west = pullback(m, chart3, check_range=False)
        stack.append(("west", chart3))
    return m_aligned, m_second, m_west, stack


def cross_cap_invariants(m: MetricField, p, include_west=False) -> CrossCapReport:
    """Full invariant extraction at one intrinsic cross cap."""
    dj = _delta_jet(m, p, 2)
    hess_user = dj.deriv(2, 0) * dj.deriv(0, 2) - dj.deriv(1, 1) ** 2
    if hess_user <= 0:
        raise NotCrossCap(f"delta-Hessian not positive definite at {tuple(p)}")
    alpha02_aligned, Delta, alpha = cross_cap_alpha02(m, p)
    m_aligned, m_second, m_west, stack = cross_cap_pipeline(m, p, include_west)
    jE_al = m_aligned.jets((0.0, 0.0), 0)[0]
    hess_aligned = _hess_delta(m_aligned)
    residual_hess = abs(hess_aligned - 4.0 * jE_al.value * Delta)
    alpha02, alpha11, alpha20, res_a12, res_fe2 = _invariants_from_second_level(m_second)
    signed = m.oriented and all(chart.jacobian_det((0.0, 0.0)) > 0 for _, chart in stack)
    return CrossCapReport(
        location=tuple(p),
        hess=float(hess_aligned),
        delta3=float(Delta),
        alpha02=float(alpha02),
        alpha11=float(alpha11) if signed else float(abs(alpha11)),
        alpha20=float(alpha20),
        residual_hess_4edelta=float(residual_hess),
        residual_a1_2=float(res_a12),
        residual_FE2=float(res_fe2),
        alpha11_signed=signed,
        chart_stack=[{"stage": name, **chart.describe()} for name, chart in stack],
    )


# ---------------------------------------------------------------------------
# curvature ray limit
# ---------------------------------------------------------------------------

def ray_limit_closed_form(alpha20, alpha11, alpha02, theta):
    c, s = np.cos(theta), np.sin(theta)
    num = alpha02 * (alpha20 * c * c - alpha02 * s * s)
    den = (c * c + (alpha11 * c + alpha02 * s) ** 2) ** 2
    return num / den


def curvature_ray_limit(m_second: MetricField, p, theta, r0=0.1, depth=7, tol=1e-3):
    """lim r^2 K along the ray of angle theta, by Richardson extrapolation.

    Expects the metric in a second-level chart with the cross cap at p."""
    rs = r0 * 0.5 ** np.arange(depth)
    pts = np.stack([p[0] + rs * np.cos(theta), p[1] + rs * np.sin(theta)], axis=-1)
    aE, aF, aG = m_second.jets_batch(pts, 2)
    K, _ = brioschi_batch(aE, aF, aG)
    fs = rs ** 2 * K
    if not np.all(np.isfinite(fs)):
        raise ExtrapolationDiverged("r^2 K not finite on the extrapolation ladder")
    val, err = neville_to_zero(rs, fs)
    if err > tol * max(1.0, abs(val)):
        raise ExtrapolationDiverged(
            f"ray-limit ladder error {err:.2e} exceeds {tol:.0e}")
    return float(val)
