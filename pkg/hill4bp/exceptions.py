"""Errors raised by the hill4bp package."""


class Hill4bpError(Exception):
    """Base class of all hill4bp errors."""


class DomainError(Hill4bpError, ValueError):
    """An argument lies outside the domain where the model is defined."""


class DegenerateError(DomainError):
    """The requested object does not exist for this parameter (L3/L4 at mu = 0)."""


class SingularityError(Hill4bpError, ZeroDivisionError):
    """Evaluation at (or closer than r_min to) the collision singularity."""


class NorthPoleError(Hill4bpError, ZeroDivisionError):
    """Stereographic projection evaluated on the North pole fiber."""


class EmptyRegion(Hill4bpError, RuntimeError):
    """Rejection sampling did not produce a point of the region."""


class RootFindError(Hill4bpError, RuntimeError):
    """No positive root of the fiber equation in the search bracket."""


class NonConvergence(Hill4bpError, RuntimeError):
    """A Newton-type iteration did not converge."""


class StepFailure(Hill4bpError, RuntimeError):
    """The adaptive integrator could not complete a step."""


class DriftError(Hill4bpError, RuntimeError):
    """The regularized trajectory left the level set Q = 1/2."""


class CollisionStop(Hill4bpError):
    """
    The physical integration reached the collision radius. The partial
    trajectory up to the stop is kept in the trajectory attribute.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class ResolutionWarning(UserWarning):
    """A Hill region component is resolved by very few grid cells."""
