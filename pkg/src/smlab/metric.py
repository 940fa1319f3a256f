"""Positive semi-definite metrics on a planar chart.

A MetricField is the triple (E, F, G) of jet-evaluable scalar fields on a
rectangle, optionally with a smooth square root lambda of the discriminant
EG - F^2 and an originating surface map f: U -> R^3.  The module provides
the induced metric of a map, Gaussian curvature through the intrinsic
four-term curvature formula, the coordinate specialization of the Kossowski
pseudo-connection, null spaces, metric pullback through charts, and the
admissibility check at rank-one degenerate points.

Sign conventions: lambda is stored with the user-declared co-orientation
sign already folded in, and pullbacks transform it by the chart Jacobian
determinant, matching the transformation of the signed area 2-form
lambda du ^ dv.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import expr as X
from . import jet as J
from .charts import Chart
from .errors import ChartRangeError, DegeneratePoint, RankMismatch

DEFAULT_ORDER = 4


# ---------------------------------------------------------------------------
# scalar fields
# ---------------------------------------------------------------------------

class ScalarField:
    """Jet-evaluable scalar field; subclasses implement jet_batch."""

    def jet_batch(self, pts, order):
        raise NotImplementedError

    def jet(self, point, order):
        coeffs = self.jet_batch(np.array([[point[0], point[1]]], dtype=float), order)[0]
        return J.Jet2(order, (point[0], point[1]), coeffs)

    def value_batch(self, pts):
        return self.jet_batch(np.asarray(pts, dtype=float), 0)[:, 0]

    def value(self, point):
        return float(self.value_batch(np.array([[point[0], point[1]]]))[0])


class ExprField(ScalarField):
    def __init__(self, node):
        self.node = node

    def jet_batch(self, pts, order):
        return X.eval_jet_batch(self.node, pts, order)

    def value_batch(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.atleast_1d(X.eval_float(self.node, pts[:, 0], pts[:, 1]))


class FuncField(ScalarField):
    """Field backed by a batch-jet callable (pts, order) -> coeff array."""

    def __init__(self, fn):
        self.fn = fn

    def jet_batch(self, pts, order):
        return self.fn(np.asarray(pts, dtype=float), order)


class ScaledField(ScalarField):
    def __init__(self, base, factor):
        self.base = base
        self.factor = float(factor)

    def jet_batch(self, pts, order):
        return self.factor * self.base.jet_batch(pts, order)


# ---------------------------------------------------------------------------
# surface maps
# ---------------------------------------------------------------------------

@dataclass
class SurfaceMap:
    """Map f: U -> R^3 with an optional unit normal field."""

    x: object
    y: object
    z: object
    nu: tuple | None = None
    domain: tuple = (-1.0, 1.0, -1.0, 1.0)
    periodic_u: bool = False
    periodic_v: bool = False

    def components(self):
        return (self.x, self.y, self.z)

    def component_jets_batch(self, pts, order):
        return [X.eval_jet_batch(c, pts, order) for c in self.components()]

    def normal_jets_batch(self, pts, order):
        return [X.eval_jet_batch(c, pts, order) for c in self.nu]

    def validate(self, samples=9, tol=1e-10):
        """Unit-length and tangency checks for the declared normal."""
        if self.nu is None:
            return
        pts = _sample_grid(self.domain, samples)
        comp = self.component_jets_batch(pts, 1)
        nu = [np.atleast_1d(X.eval_float(c, pts[:, 0], pts[:, 1])) for c in self.nu]
        norm2 = sum(c * c for c in nu)
        if np.max(np.abs(norm2 - 1.0)) > tol:
            raise ValueError("declared normal is not unit length")
        for col, label in ((J.index_of(1, 0), "f_u"), (J.index_of(0, 1), "f_v")):
            dot = sum(nu[k] * comp[k][:, col] for k in range(3))
            scale = np.sqrt(sum(comp[k][:, col] ** 2 for k in range(3))) + 1.0
            if np.max(np.abs(dot) / scale) > tol:
                raise ValueError(f"declared normal is not orthogonal to {label}")


def _sample_grid(domain, n):
    u0, u1, v0, v1 = domain
    us = np.linspace(u0, u1, n + 2)[1:-1]
    vs = np.linspace(v0, v1, n + 2)[1:-1]
    uu, vv = np.meshgrid(us, vs, indexing="ij")
    return np.stack([uu.ravel(), vv.ravel()], axis=-1)


# ---------------------------------------------------------------------------
# the metric triple
# ---------------------------------------------------------------------------

@dataclass
class MetricField:
    E: ScalarField
    F: ScalarField
    G: ScalarField
    lam: ScalarField | None = None
    source: SurfaceMap | None = None
    domain: tuple = (-1.0, 1.0, -1.0, 1.0)
    periodic_u: bool = False
    periodic_v: bool = False
    co_orientation_sign: int = 1
    oriented: bool = True
    jet_order: int = DEFAULT_ORDER
    name: str = ""

    def __post_init__(self):
        if self.co_orientation_sign not in (1, -1):
            raise ValueError("co_orientation_sign must be +1 or -1")
        if self.lam is not None and self.co_orientation_sign == -1:
            self.lam = ScaledField(self.lam, -1.0)
            self.co_orientation_sign = 1

    # -- geometry of the chart rectangle --------------------------------------

    def extents(self):
        u0, u1, v0, v1 = self.domain
        return (u1 - u0, v1 - v0)

    def wrap_batch(self, pts):
        pts = np.array(pts, dtype=float)
        u0, u1, v0, v1 = self.domain
        if self.periodic_u:
            pts[:, 0] = u0 + np.mod(pts[:, 0] - u0, u1 - u0)
        if self.periodic_v:
            pts[:, 1] = v0 + np.mod(pts[:, 1] - v0, v1 - v0)
        return pts

    def wrap(self, point):
        return tuple(self.wrap_batch(np.array([point]))[0])

    def wrapped_delta(self, p, q):
        """Difference p - q respecting periodic identifications."""
        d = np.array([p[0] - q[0], p[1] - q[1]])
        u0, u1, v0, v1 = self.domain
        if self.periodic_u:
            span = u1 - u0
            d[0] -= span * np.round(d[0] / span)
        if self.periodic_v:
            span = v1 - v0
            d[1] -= span * np.round(d[1] / span)
        return d

    def contains(self, point, margin=1e-9):
        u0, u1, v0, v1 = self.domain
        mu = margin * (u1 - u0)
        mv = margin * (v1 - v0)
        ok_u = self.periodic_u or (u0 - mu <= point[0] <= u1 + mu)
        ok_v = self.periodic_v or (v0 - mv <= point[1] <= v1 + mv)
        return ok_u and ok_v

    # -- evaluation ------------------------------------------------------------

    def jets_batch(self, pts, order):
        pts = self.wrap_batch(pts)
        return (self.E.jet_batch(pts, order),
                self.F.jet_batch(pts, order),
                self.G.jet_batch(pts, order))

    def jets(self, point, order=None):
        order = self.jet_order if order is None else order
        p = self.wrap(point)
        return (self.E.jet(p, order), self.F.jet(p, order), self.G.jet(p, order))

    def matrix(self, point):
        p = self.wrap(point)
        e = self.E.value(p)
        f = self.F.value(p)
        g = self.G.value(p)
        return np.array([[e, f], [f, g]])

    def lam_jet(self, point, order=None):
        order = self.jet_order if order is None else order
        return self.lam.jet(self.wrap(point), order)

    def lam_batch(self, pts):
        return self.lam.value_batch(self.wrap_batch(pts))

    def delta_batch(self, pts):
        e, f, g = (a[:, 0] for a in self.jets_batch(pts, 0))
        return e * g - f * f

    def scale_at(self, point):
        m = self.matrix(point)
        return max(1e-300, m[0, 0] + m[1, 1])

    # -- construction checks -----------------------------------------------------

    def validate(self, samples=9):
        """Sampled positive semi-definiteness and lambda consistency."""
        pts = _sample_grid(self.domain, samples)
        e = self.E.value_batch(pts)
        f = self.F.value_batch(pts)
        g = self.G.value_batch(pts)
        if not (np.all(np.isfinite(e)) and np.all(np.isfinite(f)) and np.all(np.isfinite(g))):
            raise ValueError("metric coefficients not finite on the domain")
        delta = e * g - f * f
        eps = 1e-10 * (1.0 + np.abs(e) + np.abs(g)) ** 2
        if np.any(e < -eps) or np.any(g < -eps) or np.any(delta < -eps):
            raise ValueError("metric is not positive semi-definite on the domain")
        if self.lam is not None:
            lam = self.lam.value_batch(pts)
            resid = np.abs(delta - lam * lam)
            if np.max(resid / (1.0 + np.abs(e * g))) > 1e-9:
                raise ValueError("lambda^2 does not match EG - F^2 on the domain")
        return self


def metric_from_exprs(E, F, G, lam=None, **kwargs):
    """Convenience constructor from parsed expressions or strings."""
    def f(e):
        return ExprField(X.parse(e) if isinstance(e, str) else e)
    lamf = None if lam is None else f(lam)
    return MetricField(E=f(E), F=f(F), G=f(G), lam=lamf, **kwargs)


# ---------------------------------------------------------------------------
# induced metrics
# ---------------------------------------------------------------------------

def induced_metric(f: SurfaceMap, validate=True, **kwargs) -> MetricField:
    """First fundamental form of f, with lambda = det(f_u, f_v, nu) when a
    normal is declared."""
    if validate:
        f.validate()

    def dot_field(which):
        def fn(pts, order):
            comp = f.component_jets_batch(pts, min(order + 1, J.MAX_ORDER))
            work = min(order + 1, J.MAX_ORDER)
            du = [J._diff(c, 0, work) for c in comp]
            dv = [J._diff(c, 1, work) for c in comp]
            a, b = {"E": (du, du), "F": (du, dv), "G": (dv, dv)}[which]
            out = sum(J._mul(a[k], b[k], work - 1) for k in range(3))
            return out[:, : J.size(order)]
        return FuncField(fn)

    lam = None
    if f.nu is not None:
        def lam_fn(pts, order):
            work = min(order + 1, J.MAX_ORDER)
            comp = f.component_jets_batch(pts, work)
            du = [J._diff(c, 0, work) for c in comp]
            dv = [J._diff(c, 1, work) for c in comp]
            nu = f.normal_jets_batch(pts, work - 1)
            det = (J._mul(du[0], J._mul(dv[1], nu[2], work - 1) - J._mul(dv[2], nu[1], work - 1), work - 1)
                   - J._mul(du[1], J._mul(dv[0], nu[2], work - 1) - J._mul(dv[2], nu[0], work - 1), work - 1)
                   + J._mul(du[2], J._mul(dv[0], nu[1], work - 1) - J._mul(dv[1], nu[0], work - 1), work - 1))
            return det[:, : J.size(order)]
        lam = FuncField(lam_fn)

    kwargs.setdefault("domain", f.domain)
    kwargs.setdefault("periodic_u", f.periodic_u)
    kwargs.setdefault("periodic_v", f.periodic_v)
    m = MetricField(E=dot_field("E"), F=dot_field("F"), G=dot_field("G"),
                    lam=lam, source=f, **kwargs)
    return m.validate() if validate else m


# ---------------------------------------------------------------------------
# curvature
# ---------------------------------------------------------------------------

def brioschi_batch(aE, aF, aG):
    """Gaussian curvature from order-2 coefficient arrays of E, F, G."""
    def d(a, i, j):
        fac = {(0, 0): 1.0, (1, 0): 1.0, (0, 1): 1.0, (2, 0): 2.0, (1, 1): 1.0, (0, 2): 2.0}[(i, j)]
        return a[:, J.index_of(i, j)] * fac

    E, Eu, Ev, Evv = d(aE, 0, 0), d(aE, 1, 0), d(aE, 0, 1), d(aE, 0, 2)
    F, Fu, Fv, Fuv = d(aF, 0, 0), d(aF, 1, 0), d(aF, 0, 1), d(aF, 1, 1)
    G, Gu, Gv, Guu = d(aG, 0, 0), d(aG, 1, 0), d(aG, 0, 1), d(aG, 2, 0)
    delta = E * G - F * F
    num = (E * (Ev * Gv - 2 * Fu * Gv + Gu ** 2)
           + F * (Eu * Gv - Ev * Gu - 2 * Ev * Fv - 2 * Fu * Gu + 4 * Fu * Fv)
           + G * (Eu * Gu - 2 * Eu * Fv + Ev ** 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        K = num / (4 * delta ** 2) - (Evv - 2 * Fuv + Guu) / (2 * delta)
    return K, delta


def gaussian_curvature(m: MetricField, p) -> float:
    """Gaussian curvature at a regular point."""
    aE, aF, aG = m.jets_batch(np.array([[p[0], p[1]]]), 2)
    K, delta = brioschi_batch(aE, aF, aG)
    if delta[0] <= _degenerate_tol(aE[0, 0], aG[0, 0], aF[0, 0]):
        raise DegeneratePoint(f"metric degenerates at {tuple(p)} (EG-F^2 = {delta[0]:.3e})")
    return float(K[0])


def _degenerate_tol(e, g, f):
    # smaller-eigenvalue criterion: lam_min <= 1e-10 (E+G) <=> delta <= ~1e-10 (E+G) lam_max
    tr = e + g
    lam_max = 0.5 * (tr + np.sqrt(max((e - g) ** 2 + 4 * f * f, 0.0)))
    return 1e-10 * tr * lam_max


# ---------------------------------------------------------------------------
# Kossowski pseudo-connection on coordinate fields
# ---------------------------------------------------------------------------

def kossowski_gamma(m: MetricField, p, i: str, j: str, k: str) -> float:
    """Gamma(d_i, d_j, d_k)(p) = (d_i g_jk + d_j g_ik - d_k g_ij) / 2."""
    for axis in (i, j, k):
        if axis not in ("u", "v"):
            raise ValueError("axes must be 'u' or 'v'")
    jE, jF, jG = m.jets(p, 1)

    def g(a, b):
        return {("u", "u"): jE, ("v", "v"): jG}.get((a, b), jF)

    def dpartial(jet, axis):
        return jet.coeff(1, 0) if axis == "u" else jet.coeff(0, 1)

    return 0.5 * (dpartial(g(j, k), i) + dpartial(g(i, k), j) - dpartial(g(i, j), k))


# ---------------------------------------------------------------------------
# null spaces
# ---------------------------------------------------------------------------

def null_space(m: MetricField, p):
    """Rank of the metric matrix at p and the kernel directions.

    Directions are Euclidean-normalized with sign fixed by: second component
    >= 0, ties broken by first component > 0.
    """
    mat = m.matrix(p)
    e, f, g = mat[0, 0], mat[0, 1], mat[1, 1]
    tr = e + g
    disc = np.sqrt(max((e - g) ** 2 + 4 * f * f, 0.0))
    lams = [0.5 * (tr - disc), 0.5 * (tr + disc)]
    tol = 1e-10 * tr
    if tr <= 0.0:
        return 0, [(1.0, 0.0), (0.0, 1.0)]
    dirs = []
    for lam in lams:
        if lam <= tol:
            v1 = np.array([f, lam - e])
            v2 = np.array([lam - g, f])
            v = v1 if np.dot(v1, v1) >= np.dot(v2, v2) else v2
            if np.dot(v, v) == 0.0:
                # diagonal matrix: kernel along the axis with the small entry
                v = np.array([1.0, 0.0]) if e <= g else np.array([0.0, 1.0])
            v = v / np.linalg.norm(v)
            v = _fix_sign(v)
            dirs.append((float(v[0]), float(v[1])))
    rank = 2 - len(dirs)
    if rank == 0:
        return 0, [(1.0, 0.0), (0.0, 1.0)]
    return rank, dirs


def _fix_sign(v):
    if v[1] < 0 or (v[1] == 0 and v[0] < 0):
        return -v
    return v


# ---------------------------------------------------------------------------
# pullback
# ---------------------------------------------------------------------------

def pullback(m: MetricField, chart: Chart, domain=None, periodic=(False, False),
             validate=False, check_range=True, name="") -> MetricField:
    """Metric with coefficients in chart coordinates.

    Etilde = E u_xi^2 + 2 F u_xi v_xi + G v_xi^2 and cyclic, with all
    derivatives taken as exact jets; lambda transforms with the Jacobian
    determinant of the chart.
    """
    pm = chart.pmap
    cache = {}

    def mapped(pts, order):
        # one chart + source evaluation feeds all four pulled-back fields
        key = (pts.tobytes(), order)
        hit = cache.get(key)
        if hit is not None:
            return hit
        cu, cv = pm.jet_coeffs_batch(pts, order + 1)
        q = np.stack([cu[:, 0], cv[:, 0]], axis=-1)
        if check_range:
            qw = m.wrap_batch(q)
            u0, u1, v0, v1 = m.domain
            mu = 1e-9 * (u1 - u0)
            mv = 1e-9 * (v1 - v0)
            if (np.any(qw[:, 0] < u0 - mu) or np.any(qw[:, 0] > u1 + mu)
                    or np.any(qw[:, 1] < v0 - mv) or np.any(qw[:, 1] > v1 + mv)):
                raise ChartRangeError("chart image leaves the metric domain")
        aE, aF, aG = m.jets_batch(q, order)
        cut = cu[:, : J.size(order)]
        cvt = cv[:, : J.size(order)]
        data = {
            "du": (J._diff(cu, 0, order + 1), J._diff(cv, 0, order + 1)),
            "dv": (J._diff(cu, 1, order + 1), J._diff(cv, 1, order + 1)),
            "E": J._compose(aE, cut, cvt, order),
            "F": J._compose(aF, cut, cvt, order),
            "G": J._compose(aG, cut, cvt, order),
            "cu": cut, "cv": cvt, "q": q,
        }
        if len(cache) > 8:
            cache.clear()
        cache[key] = data
        return data

    def tensor_field(which):
        def fn(pts, order):
            d = mapped(pts, order)
            a, b = d["du"] if which in ("E", "F") else d["dv"]
            c, e = d["du"] if which == "E" else d["dv"]
            return (J._mul(d["E"], J._mul(a, c, order), order)
                    + J._mul(d["F"], J._mul(a, e, order) + J._mul(b, c, order), order)
                    + J._mul(d["G"], J._mul(b, e, order), order))
        return FuncField(fn)

    lam = None
    if m.lam is not None:
        def lam_fn(pts, order):
            d = mapped(pts, order)
            u_x, v_x = d["du"]
            u_y, v_y = d["dv"]
            jac = J._mul(u_x, v_y, order) - J._mul(u_y, v_x, order)
            lam_src = m.lam.jet_batch(m.wrap_batch(d["q"]), order)
            lam_c = J._compose(lam_src, d["cu"], d["cv"], order)
            return J._mul(jac, lam_c, order)
        lam = FuncField(lam_fn)

    out = MetricField(E=tensor_field("E"), F=tensor_field("F"), G=tensor_field("G"),
                      lam=lam, source=None,
                      domain=domain or (-1.0, 1.0, -1.0, 1.0),
                      periodic_u=periodic[0], periodic_v=periodic[1],
                      oriented=m.oriented and chart.jacobian_det((0.0, 0.0)) > 0,
                      jet_order=m.jet_order, name=name or (m.name + "~pullback"))
    return out.validate() if validate else out


# ---------------------------------------------------------------------------
# admissibility
# ---------------------------------------------------------------------------

@dataclass
class AdmissibilitySample:
    point: tuple
    null_dir: tuple
    gammas: tuple  # (uuN, uNN, NNN) in the aligned chart
    max_abs: float


@dataclass
class AdmissibilityReport:
    samples: list = field(default_factory=list)
    max_abs: float = 0.0
    scale: float = 1.0
    tol: float = 1e-8
    admissible: bool = True

    def to_dict(self):
        return {
            "admissible": self.admissible,
            "max_abs_gamma": self.max_abs,
            "tol": self.tol * self.scale,
            "samples": [{"point": list(s.point), "null_dir": list(s.null_dir),
                         "gammas": list(s.gammas), "max_abs": s.max_abs}
                        for s in self.samples],
        }


def admissibility_check(m: MetricField, samples, tol=1e-8) -> AdmissibilityReport:
    """Evaluate the pseudo-connection on the null space at rank-one points.

    Each sample point gets an affine chart with the null direction along
    d_v; the three generators Gamma(d_u,d_u,d_v), Gamma(d_u,d_v,d_v),
    Gamma(d_v,d_v,d_v) are evaluated from the pulled-back jets.
    """
    report = AdmissibilityReport(tol=tol)
    scale = 1.0
    for p in samples:
        p = tuple(p)
        rank, dirs = null_space(m, p)
        if rank != 1:
            raise RankMismatch(f"point {p} has metric rank {rank}, expected 1")
        n = np.array(dirs[0])
        w = np.array([n[1], -n[0]])  # J = +1 alignment
        chart = Chart.affine(np.column_stack([w, n]), offset=p, name="null-align")
        mm = pullback(m, chart, check_range=False)
        jE, jF, jG = mm.jets((0.0, 0.0), 1)
        g_uuv = jF.coeff(1, 0) - 0.5 * jE.coeff(0, 1)
        g_uvv = 0.5 * jG.coeff(1, 0)
        g_vvv = 0.5 * jG.coeff(0, 1)
        gam = (g_uuv, g_uvv, g_vvv)
        mx = max(abs(x) for x in gam)
        scale = max(scale, m.scale_at(p))
        report.samples.append(AdmissibilitySample(p, tuple(n), gam, mx))
        report.max_abs = max(report.max_abs, mx)
    report.scale = scale
    report.admissible = report.max_abs <= tol * scale
    return report
