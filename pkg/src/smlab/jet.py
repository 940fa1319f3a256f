"""Truncated bivariate Taylor-jet arithmetic.

A jet of order n at a base point (u0, v0) stores the coefficients c_ij of
the monomials (u-u0)^i (v-v0)^j with i+j <= n, in graded-lexicographic
order: degree blocks 0, 1, 2, ... and within a block v-powers ascending,
so the layout is [1, u, v, u^2, uv, v^2, ...].  All operations are exact
through the shared truncation order.

The low-level kernels (_mul, _series, _compose, ...) operate on plain
ndarrays whose last axis is the coefficient axis, so they broadcast over
arbitrary batches of jets; Jet2 is the single-jet wrapper used by the rest
of the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BasePointMismatch, DivisionByDegenerate, NegativeRadicand

MAX_ORDER = 6  # Jet2 cap; raw kernels accept higher orders (chart composition).


def size(order):
    """Number of coefficients of a jet of the given order."""
    return (order + 1) * (order + 2) // 2


def index_of(i, j):
    """Position of the u^i v^j coefficient in the graded-lex layout."""
    d = i + j
    return d * (d + 1) // 2 + j


_TABLES = {}


def _tables(order):
    """Cached index tables for one truncation order."""
    tab = _TABLES.get(order)
    if tab is not None:
        return tab
    monos = [(d - j, j) for d in range(order + 1) for j in range(d + 1)]
    n = len(monos)
    pairs = []
    for pa, (ia, ja) in enumerate(monos):
        for pb, (ib, jb) in enumerate(monos):
            if ia + ib + ja + jb <= order:
                pairs.append((index_of(ia + ib, ja + jb), pa, pb))
    pairs.sort()
    iout = np.array([p[0] for p in pairs])
    ia = np.array([p[1] for p in pairs])
    ib = np.array([p[2] for p in pairs])
    # reduceat boundaries; every output index occurs (pair with the constant).
    offsets = np.searchsorted(iout, np.arange(n))
    # d/du and d/dv as gather/scale maps into order-1 layout.
    if order > 0:
        du_src = np.array([index_of(i + 1, j) for (i, j) in monos if i + j < order])
        du_fac = np.array([float(i + 1) for (i, j) in monos if i + j < order])
        dv_src = np.array([index_of(i, j + 1) for (i, j) in monos if i + j < order])
        dv_fac = np.array([float(j + 1) for (i, j) in monos if i + j < order])
    else:
        du_src = dv_src = np.zeros(0, dtype=int)
        du_fac = dv_fac = np.zeros(0)
    tab = (ia, ib, offsets, du_src, du_fac, dv_src, dv_fac, monos)
    _TABLES[order] = tab
    return tab


# ---------------------------------------------------------------------------
# raw kernels: arrays of shape (..., size(order))
# ---------------------------------------------------------------------------

def _const(value, order):
    c = np.zeros(size(order))
    c[0] = value
    return c


def _mul(a, b, order):
    ia, ib, offsets = _tables(order)[:3]
    prod = a[..., ia] * b[..., ib]
    return np.add.reduceat(prod, offsets, axis=-1)


def _pow_int(a, k, order):
    if k < 0:
        return _pow_int(_recip(a, order), -k, order)
    result = np.zeros_like(a)
    result[..., 0] = 1.0
    base = a
    while k:
        if k & 1:
            result = _mul(result, base, order)
        k >>= 1
        if k:
            base = _mul(base, base, order)
    return result


def _series(g, a, order):
    """Compose a univariate Taylor series g (coeffs on the last axis,
    ascending powers, length order+1) with the jet a around a's constant
    term: result = sum_k g_k (a - a0)^k."""
    w = a.copy()
    w[..., 0] = 0.0
    res = np.zeros_like(a)
    res[..., 0] = g[..., order]
    for k in range(order - 1, -1, -1):
        res = _mul(res, w, order)
        res[..., 0] += g[..., k]
    return res


def _recip(a, order):
    t0 = a[..., 0]
    if np.any(t0 == 0.0):
        raise DivisionByDegenerate("reciprocal of jet with zero constant term")
    ks = np.arange(order + 1)
    g = (-1.0) ** ks / t0[..., None] ** (ks + 1)
    return _series(g, a, order)


def _div(a, b, order):
    return _mul(a, _recip(b, order), order)


def _sqrt(a, order):
    t0 = a[..., 0]
    if np.any(t0 <= 0.0):
        raise NegativeRadicand("sqrt of jet with non-positive constant term")
    g = np.empty(a.shape[:-1] + (order + 1,))
    g[..., 0] = np.sqrt(t0)
    for k in range(1, order + 1):
        g[..., k] = g[..., k - 1] * (0.5 - (k - 1)) / (k * t0)
    return _series(g, a, order)


def _exp(a, order):
    g = np.exp(a[..., 0])[..., None] / _factorials(order)
    return _series(g, a, order)


def _factorials(order):
    return np.array([math.factorial(k) for k in range(order + 1)], dtype=float)


def _sin(a, order):
    t0 = a[..., 0][..., None]
    ks = np.arange(order + 1)
    g = np.sin(t0 + ks * (np.pi / 2)) / _factorials(order)
    return _series(g, a, order)


def _cos(a, order):
    t0 = a[..., 0][..., None]
    ks = np.arange(order + 1)
    g = np.cos(t0 + ks * (np.pi / 2)) / _factorials(order)
    return _series(g, a, order)


def _diff(a, axis, order):
    """Derivative jet, one order lower. axis 0 = u, axis 1 = v."""
    _, _, _, du_src, du_fac, dv_src, dv_fac, _ = _tables(order)
    if axis == 0:
        return a[..., du_src] * du_fac
    return a[..., dv_src] * dv_fac


def _poly_apply(outer, wx, wy, order):
    """sum_{ij} outer_ij * wx^i * wy^j, truncated at order."""
    monos = _tables(order)[7]
    xp = [None] * (order + 1)
    yp = [None] * (order + 1)
    one = np.zeros(np.broadcast_shapes(wx.shape, wy.shape))
    one[..., 0] = 1.0
    xp[0] = one
    yp[0] = one
    for k in range(1, order + 1):
        xp[k] = _mul(xp[k - 1], wx, order)
        yp[k] = _mul(yp[k - 1], wy, order)
    res = np.zeros_like(one)
    for pos, (i, j) in enumerate(monos):
        c = outer[..., pos]
        if np.all(c == 0.0):
            continue
        res = res + c[..., None] * _mul(xp[i], yp[j], order)
    return res


def _compose(outer, inner_x, inner_y, order):
    """Jet of outer(inner_x, inner_y); inner constant terms are the outer
    base point, which the caller has already checked."""
    wx = inner_x.copy()
    wx[..., 0] = 0.0
    wy = inner_y.copy()
    wy[..., 0] = 0.0
    return _poly_apply(outer, wx, wy, order)


def _truncate(a, order_from, order_to):
    if order_to > order_from:
        raise ValueError("cannot raise jet order by truncation")
    return a[..., : size(order_to)]


def _eval_poly(a, du, dv, order):
    """Value of the jet polynomial at offsets (du, dv) from the base point."""
    monos = _tables(order)[7]
    du = np.asarray(du, dtype=float)
    dv = np.asarray(dv, dtype=float)
    total = np.zeros(np.broadcast_shapes(np.shape(du), np.shape(dv), a.shape[:-1]))
    for pos, (i, j) in enumerate(monos):
        total = total + a[..., pos] * du ** i * dv ** j
    return total


# ---------------------------------------------------------------------------
# single-jet wrapper
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Jet2:
    """Truncated Taylor expansion of a scalar at a point of the (u,v)-plane."""

    order: int
    point: tuple
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not (0 <= self.order <= MAX_ORDER):
            raise ValueError(f"jet order must be in [0, {MAX_ORDER}]")
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (size(self.order),):
            raise ValueError("coefficient array has wrong length")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite jet coefficient")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "point", (float(self.point[0]), float(self.point[1])))

    # -- constructors --------------------------------------------------------

    @staticmethod
    def constant(value, order, point=(0.0, 0.0)):
        return Jet2(order, point, _const(float(value), order))

    @staticmethod
    def variable(name, order, point=(0.0, 0.0)):
        c = _const(point[0] if name == "u" else point[1], order)
        if order >= 1:
            c[index_of(1, 0) if name == "u" else index_of(0, 1)] = 1.0
        return Jet2(order, point, c)

    @staticmethod
    def variables(order, point=(0.0, 0.0)):
        return Jet2.variable("u", order, point), Jet2.variable("v", order, point)

    # -- access ---------------------------------------------------------------

    @property
    def value(self):
        return float(self.coeffs[0])

    def coeff(self, i, j):
        if i + j > self.order:
            raise ValueError("coefficient beyond truncation order")
        return float(self.coeffs[index_of(i, j)])

    def deriv(self, i, j):
        """Partial derivative value d^{i+j} f / du^i dv^j at the base point."""
        return self.coeff(i, j) * math.factorial(i) * math.factorial(j)

    def d_du(self):
        return Jet2(self.order - 1, self.point, _diff(self.coeffs, 0, self.order))

    def d_dv(self):
        return Jet2(self.order - 1, self.point, _diff(self.coeffs, 1, self.order))

    def truncated(self, order):
        return Jet2(order, self.point, _truncate(self.coeffs, self.order, order))

    def eval_at_offset(self, du, dv):
        return float(_eval_poly(self.coeffs, du, dv, self.order))

    # -- arithmetic -----------------------------------------------------------

    def _lift(self, other):
        if isinstance(other, Jet2):
            if other.order != self.order:
                raise ValueError("jet order mismatch")
            if not np.allclose(other.point, self.point, rtol=0.0, atol=1e-9 * (1 + abs(self.point[0]) + abs(self.point[1]))):
                raise ValueError("jet base point mismatch")
            return other
        return Jet2.constant(float(other), self.order, self.point)

    def __add__(self, other):
        other = self._lift(other)
        return Jet2(self.order, self.point, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._lift(other)
        return Jet2(self.order, self.point, self.coeffs - other.coeffs)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return Jet2(self.order, self.point, -self.coeffs)

    def __mul__(self, other):
        other = self._lift(other)
        return Jet2(self.order, self.point, _mul(self.coeffs, other.coeffs, self.order))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._lift(other)
        return Jet2(self.order, self.point, _div(self.coeffs, other.coeffs, self.order))

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __pow__(self, p):
        if isinstance(p, int) or float(p).is_integer():
            return Jet2(self.order, self.point, _pow_int(self.coeffs, int(p), self.order))
        two_p = 2.0 * float(p)
        if two_p.is_integer():
            # half-integer exponent: sqrt composed with an odd integer power
            return Jet2(self.order, self.point,
                        _pow_int(_sqrt(self.coeffs, self.order), int(two_p), self.order))
        raise ValueError("jet powers are restricted to integer and half-integer exponents")

    def sqrt(self):
        return Jet2(self.order, self.point, _sqrt(self.coeffs, self.order))

    def exp(self):
        return Jet2(self.order, self.point, _exp(self.coeffs, self.order))

    def sin(self):
        return Jet2(self.order, self.point, _sin(self.coeffs, self.order))

    def cos(self):
        return Jet2(self.order, self.point, _cos(self.coeffs, self.order))


def jet_compose(outer, inner_x, inner_y):
    """Jet of outer(inner_x, inner_y).

    The inner jets share a base point and order; their constant terms must
    equal outer's base point.
    """
    if inner_x.order != inner_y.order:
        raise ValueError("inner jet order mismatch")
    if not np.allclose(inner_x.point, inner_y.point, rtol=0.0, atol=1e-12):
        raise ValueError("inner jet base point mismatch")
    order = min(outer.order, inner_x.order)
    scale = 1.0 + abs(inner_x.value) + abs(inner_y.value)
    if (abs(inner_x.value - outer.point[0]) > 1e-9 * scale
            or abs(inner_y.value - outer.point[1]) > 1e-9 * scale):
        raise BasePointMismatch(
            f"inner constant terms ({inner_x.value}, {inner_y.value}) do not match "
            f"outer base point {outer.point}")
    res = _compose(_truncate(outer.coeffs, outer.order, order),
                   _truncate(inner_x.coeffs, inner_x.order, order),
                   _truncate(inner_y.coeffs, inner_y.order, order), order)
    return Jet2(order, inner_x.point, res)
