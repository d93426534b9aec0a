"""Exception types. Each names a specific failure mode of an operation."""


class ToruslockError(Exception):
    pass


class RepresentationError(ToruslockError, ValueError):
    """A map left the admissible class (fibre slope <= -1, bad data...)."""


class IncompatibleRepresentationsError(ToruslockError):
    """Interpolation between fields in different representations."""


class DomainError(ToruslockError, ValueError):
    """A precondition on the inputs is violated."""


class TargetUnreachableError(ToruslockError):
    """Root bracketing found no sign change for the requested target."""


class NotATwistFamilyError(ToruslockError):
    """Sampled displacement is not strictly increasing in the parameter."""


class BudgetExceededError(ToruslockError):
    """An iteration/search budget ran out before the goal was met."""


class PossiblyLockedAlready(ToruslockError):
    """Base rationalization found no room to move the rotation number:
    the input may already be mode-locked, there is nothing to perturb."""


class CompositionDriftError(ToruslockError):
    """A conjugacy identity failed beyond tolerance (accumulated round-off)."""


class BoundaryMismatchError(ToruslockError):
    """Surgery target does not match the current field on the interval ends."""


class IntervalTooWideError(ToruslockError, ValueError):
    """Surgery interval longer than 1/q."""


class Phase1IncompleteError(ToruslockError):
    """A fibre still has zero total variation of the q-step displacement."""


class GridTooCoarseError(ToruslockError, ValueError):
    """Triangle diameter bound unachievable at the requested grid size."""


class SeedExhaustedError(ToruslockError):
    """Jitter retries failed to separate vertex fibre orbits."""


class DeltaInfeasibleError(ToruslockError):
    """PWA approximation cannot meet the slope constraint within delta."""


class GeometryDegenerateError(ToruslockError):
    """Polygon clipping produced unresolvable slivers."""


class GenericityFailedError(ToruslockError):
    def __init__(self, msg, offenders=None):
        super().__init__(msg)
        self.offenders = offenders or []


class ArrangementInconsistentError(ToruslockError):
    """Zero-set incidence is broken (a vertex without exactly two segments)."""


class CriticalFibreError(ToruslockError, ValueError):
    """Operation requested on a fibre carrying a critical vertex."""


class ContinuationDivergedError(ToruslockError):
    """Corridor continuation exceeded its event budget without closing."""


class PigeonholeViolationError(ToruslockError):
    """No repeated target projection within the expected number of targets."""


class FibreExhaustedError(ToruslockError):
    """A vertical jump found no next negative-region component on the fibre."""


class TiltTooLargeError(ToruslockError, ValueError):
    """Tilting vertical segments destroyed a clearance margin."""


class InvalidAnnulusError(ToruslockError, ValueError):
    """Boundary curves do not bound an annulus (homotopy mismatch...)."""


class CertificationInfeasibleError(ToruslockError):
    def __init__(self, msg, binding=None):
        super().__init__(msg)
        self.binding = binding
