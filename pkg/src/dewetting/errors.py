"""Exception types raised across the package."""


class CurveError(ValueError):
    """An open curve violates one of its structural invariants."""


class ZeroSegment(CurveError):
    """Two consecutive nodes coincide, so a segment has zero length."""


class FieldMismatch(ValueError):
    """A discrete field does not match the node or segment count of its curve."""


class AssumptionViolated(RuntimeError):
    """The well-posedness conditions of the linear step do not hold."""


class SolveFailed(RuntimeError):
    """The linear system is singular to working precision or the residual is too large."""


class ContactCrossing(RuntimeError):
    """The left contact point moved past the right one (film collapse)."""


class NotSimple(ValueError):
    """A polygon or closed chain intersects itself."""


class NonPositiveError(ValueError):
    """A convergence table contains a non-positive error."""
