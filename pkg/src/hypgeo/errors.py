"""Exception types shared across the package.

Errors are plain exception classes so that sweep drivers can catch a
specific failure (say, an infeasible side pair) and keep going.
"""

from __future__ import annotations


class HypGeoError(Exception):
    """Base class for every error raised by this package."""


class DomainError(HypGeoError, ValueError):
    """An argument lies outside the domain of the operation."""


class GeometryInfeasible(HypGeoError, ValueError):
    """No polygon exists with the requested side lengths."""


class GeometryInconsistent(HypGeoError, ValueError):
    """Supplied side lengths violate the closed-form polygon identities."""


class SearchExhausted(HypGeoError, RuntimeError):
    """A parameter search reached its cap without meeting the target."""


class CurvatureOutOfBand(HypGeoError, RuntimeError):
    """A blended metric failed its curvature certification."""


class IntegrationFailure(HypGeoError, RuntimeError):
    """The ODE integrator could not meet the requested tolerance."""


class HorizonTooShort(HypGeoError, ValueError):
    """A sampled solution does not reach the requested width."""


class BoundViolated(HypGeoError, AssertionError):
    """A proven inequality failed numerically (indicates a bug)."""

    def __init__(self, message: str, *, mode: object = None, ratio: float | None = None):
        super().__init__(message)
        self.mode = mode
        self.ratio = ratio


class PreconditionUnmet(HypGeoError, ValueError):
    """Inputs fail the hypotheses under which a check is meaningful."""


class AdmissibilityFailed(HypGeoError, ValueError):
    """A perturbation is too large for the distortion bound to apply."""


class CertificationFailed(HypGeoError, AssertionError):
    """A grid point violates a certified inequality."""

    def __init__(self, message: str, *, point: object = None, margin: float | None = None):
        super().__init__(message)
        self.point = point
        self.margin = margin


class LengthConstraintViolated(HypGeoError, ValueError):
    """A pants decomposition carries a curve that is too short."""


class PatternMismatch(HypGeoError, ValueError):
    """The local configuration does not admit the requested move."""


class ArityMismatch(HypGeoError, ValueError):
    """A list argument has the wrong number of entries."""


class DegenerateArea(HypGeoError, ValueError):
    """A piece is too small for the test-function bound to apply."""


class SolverFailure(HypGeoError, RuntimeError):
    """An iterative eigensolver failed to converge."""


class NoSignChange(HypGeoError, ValueError):
    """A root bracket does not contain a sign change."""


class BoundaryTooClose(HypGeoError, ValueError):
    """A finite-difference stencil would leave the sampled range."""
