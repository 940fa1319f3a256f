"""smlab: analysis of positive semi-definite metrics on 2-manifolds.

Classifies degenerate points (A2 / A3 / intrinsic cross caps), computes the
intrinsic invariants attached to them, and numerically verifies Gauss-Bonnet
identities on compact examples.
"""

__version__ = "0.1.0"

from .jet import Jet2, jet_compose  # noqa: F401
from .expr import parse as parse_expr  # noqa: F401
from .metric import (MetricField, SurfaceMap, admissibility_check,  # noqa: F401
                     gaussian_curvature, induced_metric, kossowski_gamma,
                     metric_from_exprs, null_space, pullback)
from .kossowski import (classify_point, normal_form_invariants,  # noqa: F401
                        product_curvature, singular_curvature,
                        trace_singular_curve, verify_normalized_chart)
from .whitney import (cross_cap_alpha02, cross_cap_invariants,  # noqa: F401
                      curvature_ray_limit, detect_cross_caps)
from .integrate import (gb_report, integrate_K_dA, integrate_K_dhatA,  # noqa: F401
                        integrate_kappa_s)
