"""Exception types shared across the package.

Every numerical failure mode that a caller can reasonably react to gets its
own class; plain ValueError is reserved for programming errors (mismatched
jet orders and the like).
"""


class SmlabError(Exception):
    """Base class for all package errors."""


# --- jet arithmetic ---------------------------------------------------------

class DivisionByDegenerate(SmlabError):
    """Division by a jet whose constant term is zero."""


class NegativeRadicand(SmlabError):
    """Square root of a jet whose constant term is not positive."""


class BasePointMismatch(SmlabError):
    """Jet composition where inner constant terms do not match the outer base point."""


# --- expression front end ---------------------------------------------------

class ParseError(SmlabError):
    def __init__(self, message, offset, expected=()):
        super().__init__(f"{message} at offset {offset}" +
                         (f" (expected {', '.join(sorted(expected))})" if expected else ""))
        self.offset = offset
        self.expected = frozenset(expected)


class RejectedConstruct(SmlabError):
    """Construct outside the smooth fragment (abs, general exponents)."""


class DomainError(SmlabError):
    """Expression not evaluable at the requested point."""


# --- metric layer ------------------------------------------------------------

class DegeneratePoint(SmlabError):
    """Curvature requested at a point where the metric degenerates."""


class ChartRangeError(SmlabError):
    """Chart image leaves the metric's domain."""


class RankMismatch(SmlabError):
    """Sample does not have the expected metric rank."""


# --- singular curve analysis -------------------------------------------------

class DegenerateStart(SmlabError):
    """Curve tracing seeded where the level-set gradient vanishes."""


class RankZeroEncountered(SmlabError):
    """Metric rank dropped to zero along a traced curve."""


class NoConvergence(SmlabError):
    """An iterative solve failed to converge."""


class NotA2(SmlabError):
    def __init__(self, message, margin=None):
        super().__init__(message if margin is None else f"{message} (margin {margin:.3e})")
        self.margin = margin


class ExtrapolationDiverged(SmlabError):
    """Richardson ladder did not settle within tolerance."""


class NotNormalized(SmlabError):
    """Chart fails the normalized-chart conditions."""


# --- cross cap pipeline ------------------------------------------------------

class NotCrossCap(SmlabError):
    """Point is not an intrinsic cross cap."""


class SolveFailed(SmlabError):
    """Singular linear system in a chart-construction stage."""


class DegenerateGHessian(SmlabError):
    """Vanishing G-Hessian determinant in the second-level adjustment."""


# --- integration -------------------------------------------------------------

class SingularSetUnresolved(SmlabError):
    """Quadrature tile interacts with the singular set in an unresolvable way."""


class NonConvergentNearA3(SmlabError):
    """Line integral refinement stalls near an A3 point."""


# --- configuration -----------------------------------------------------------

class ConfigError(SmlabError):
    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
