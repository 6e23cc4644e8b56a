"""Exception types raised across the library.

Input-shaped problems (bad matrices, bad flags) raise the validation
errors; data-dependent numerical failures raise the computation errors.
The CLI maps the former to exit code 2 and the latter to exit code 3.
"""


class ThetaGaussError(Exception):
    """Base class for all library errors."""


# -- validation errors -------------------------------------------------------

class NonPositiveDefinite(ThetaGaussError):
    """Re(B) is not positive definite (or is numerically degenerate)."""


class NotPD(ThetaGaussError):
    """A covariance target is not symmetric positive definite."""


class NotUnimodular(ThetaGaussError):
    """An integer matrix does not have determinant +-1."""


# -- numerical failures ------------------------------------------------------

class ToleranceUnreachable(ThetaGaussError):
    """The requested truncation certificate cannot be issued: either the
    radius would exceed the configured hard cap or the tolerance is below
    the double-precision floor."""


class DivisorHit(ThetaGaussError):
    """theta(u, B) vanishes (within tolerance), so the distribution with
    these parameters is undefined."""


class NoConvergence(ThetaGaussError):
    """Newton iteration did not meet the convergence criterion."""


class DegenerateSample(ThetaGaussError):
    """Sample covariance is singular; the MLE does not exist."""


class TooFewSamples(ThetaGaussError):
    """No chi-square cell reaches the minimum expected count."""


class NoZeroFound(ThetaGaussError):
    """No zero of theta was located inside the search window."""


class SingularDivisorPoint(ThetaGaussError):
    """All first partials of theta vanish at a divisor point, so the Gauss
    map (and the statistical maps) are undefined there."""


class IndeterminatePoint(ThetaGaussError):
    """All coordinates of a projective image vanish."""


class RankDeficientInput(ThetaGaussError):
    """Too few (or too degenerate) points to determine a vanishing form."""
