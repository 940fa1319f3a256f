"""Polynomial coordinate changes.

Every chart used in the package (affine null-direction alignment, the
quadratic adapted change, level adjustments, West cubics, curve-based
strongly adapted charts) is a polynomial map (xi, eta) -> (u, v), stored
densely in the same graded-lex layout as jets.  Composition is exact, so a
whole chart stack collapses to a single PolyMap2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jet as J


def _pad(coeffs, degree_from, degree_to):
    out = np.zeros(J.size(degree_to))
    out[: J.size(degree_from)] = coeffs
    return out


class PolyMap2:
    """Polynomial map of the plane, components in graded-lex coefficient layout."""

    def __init__(self, cu, cv, degree):
        self.degree = int(degree)
        self.cu = np.asarray(cu, dtype=float)
        self.cv = np.asarray(cv, dtype=float)
        if self.cu.shape != (J.size(self.degree),) or self.cv.shape != (J.size(self.degree),):
            raise ValueError("coefficient arrays inconsistent with degree")

    # -- constructors ---------------------------------------------------------

    @staticmethod
    def identity():
        return PolyMap2.affine(np.eye(2), (0.0, 0.0))

    @staticmethod
    def affine(matrix, offset=(0.0, 0.0)):
        matrix = np.asarray(matrix, dtype=float)
        cu = np.zeros(3)
        cv = np.zeros(3)
        cu[0], cv[0] = offset
        cu[J.index_of(1, 0)] = matrix[0, 0]
        cu[J.index_of(0, 1)] = matrix[0, 1]
        cv[J.index_of(1, 0)] = matrix[1, 0]
        cv[J.index_of(0, 1)] = matrix[1, 1]
        return PolyMap2(cu, cv, 1)

    @staticmethod
    def from_coeff_dicts(cu_terms, cv_terms, degree):
        """Build from {(i, j): coefficient} dictionaries."""
        cu = np.zeros(J.size(degree))
        cv = np.zeros(J.size(degree))
        for (i, j), c in cu_terms.items():
            cu[J.index_of(i, j)] = c
        for (i, j), c in cv_terms.items():
            cv[J.index_of(i, j)] = c
        return PolyMap2(cu, cv, degree)

    # -- evaluation -----------------------------------------------------------

    def value_batch(self, pts):
        pts = np.asarray(pts, dtype=float)
        u = J._eval_poly(self.cu, pts[:, 0], pts[:, 1], self.degree)
        v = J._eval_poly(self.cv, pts[:, 0], pts[:, 1], self.degree)
        return np.stack([u, v], axis=-1)

    def value(self, point):
        out = self.value_batch(np.array([point]))[0]
        return (float(out[0]), float(out[1]))

    def jet_coeffs_batch(self, pts, order):
        """Exact Taylor coefficients of both components at each point."""
        pts = np.asarray(pts, dtype=float)
        n = pts.shape[0]
        work = max(self.degree, order, 1)
        sz = J.size(work)
        tx = np.zeros((n, sz))
        ty = np.zeros((n, sz))
        tx[:, 0] = pts[:, 0]
        ty[:, 0] = pts[:, 1]
        tx[:, J.index_of(1, 0)] = 1.0
        ty[:, J.index_of(0, 1)] = 1.0
        cu = J._poly_apply(_pad(self.cu, self.degree, work), tx, ty, work)
        cv = J._poly_apply(_pad(self.cv, self.degree, work), tx, ty, work)
        return cu[:, : J.size(order)], cv[:, : J.size(order)]

    def jets(self, point, order):
        cu, cv = self.jet_coeffs_batch(np.array([point]), order)
        return (J.Jet2(order, point, cu[0]), J.Jet2(order, point, cv[0]))

    def jacobian(self, point):
        cu, cv = self.jet_coeffs_batch(np.array([point]), 1)
        return np.array([[cu[0, 1], cu[0, 2]], [cv[0, 1], cv[0, 2]]])

    def compose(self, inner):
        """Exact composition self(inner(.)); degrees multiply."""
        degree = max(self.degree * inner.degree, 1)
        if degree > 12:
            raise ValueError("chart stack degree exceeds supported bound")
        ix = _pad(inner.cu, inner.degree, degree)
        iy = _pad(inner.cv, inner.degree, degree)
        cu = J._poly_apply(_pad(self.cu, self.degree, degree), ix, iy, degree)
        cv = J._poly_apply(_pad(self.cv, self.degree, degree), ix, iy, degree)
        return PolyMap2(cu, cv, degree)


@dataclass
class Chart:
    """A jet-evaluable coordinate change (xi, eta) -> (u, v)."""

    pmap: PolyMap2
    kind: str = "polynomial"  # affine | polynomial | curve
    stages: tuple = ()

    @staticmethod
    def identity():
        return Chart(PolyMap2.identity(), kind="affine", stages=("identity",))

    @staticmethod
    def affine(matrix, offset=(0.0, 0.0), name="affine"):
        return Chart(PolyMap2.affine(matrix, offset), kind="affine", stages=(name,))

    def compose(self, inner, kind=None):
        """Chart representing self applied after inner: point -> self(inner(point))."""
        return Chart(self.pmap.compose(inner.pmap),
                     kind=kind or ("affine" if self.kind == inner.kind == "affine" else "polynomial"),
                     stages=self.stages + inner.stages)

    def value(self, point):
        return self.pmap.value(point)

    def jets(self, point, order):
        return self.pmap.jets(point, order)

    def jacobian(self, point):
        return self.pmap.jacobian(point)

    def jacobian_det(self, point):
        return float(np.linalg.det(self.pmap.jacobian(point)))

    def describe(self):
        return {
            "kind": self.kind,
            "stages": list(self.stages),
            "degree": self.pmap.degree,
            "cu": self.pmap.cu.tolist(),
            "cv": self.pmap.cv.tolist(),
        }
