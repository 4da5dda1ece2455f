"""Exception types shared across the package.

Every error carries a stable ``token`` used by the CLI for machine-readable
reporting and exit-code mapping.
"""


class RivkitError(Exception):
    """Base class for all rivkit errors."""

    token = "ERROR"


class NoRoots(RivkitError):
    """Root finding requested on a degree-0 polynomial."""

    token = "NO_ROOTS"


class ZeroNumerator(RivkitError):
    """Relative degree undefined: numerator is identically zero."""

    token = "ZERO_NUMERATOR"


class PoleEvaluation(RivkitError):
    """Transfer function evaluated exactly at a pole."""

    token = "POLE_EVALUATION"


class DegenerateNormalization(RivkitError):
    """Denominator constant term is zero; the constant-term-1 form cannot represent it."""

    token = "DEGENERATE_NORMALIZATION"


class NegativeRealPole(RivkitError):
    """DT pole on the closed negative real axis; principal matrix log is not real."""

    token = "NEGATIVE_REAL_POLE"


class SingularDenominator(RivkitError):
    """Leading denominator coefficient is zero."""

    token = "SINGULAR_DENOMINATOR"


class DomainCertificateInvalid(RivkitError):
    """The DT model is outside the validity domain of the inverse sampling map."""

    token = "DOMAIN_INVALID"


class JacobianSingular(RivkitError):
    """Finite-difference Jacobian of the sampling map is numerically singular."""

    token = "JACOBIAN_SINGULAR"


class ImproperFilter(RivkitError):
    """Filter numerator degree exceeds denominator degree."""

    token = "IMPROPER_FILTER"


class SingularNormalMatrix(RivkitError):
    """Modified normal matrix numerically singular (condition number > 1e14)."""

    token = "SINGULAR_NORMAL_MATRIX"


class PemDiverged(RivkitError):
    """ARMA prediction-error minimization failed to find a descent step."""

    token = "PEM_DIVERGED"


class NotConverged(RivkitError):
    """Operation requires a converged estimation report."""

    token = "NOT_CONVERGED"


class NonUniformSampling(RivkitError):
    """Input data time stamps are not uniformly spaced."""

    token = "NONUNIFORM_SAMPLING"


class UnstableNoiseFilter(RivkitError):
    """Noise generator requested with an unstable or non-invertible ARMA model."""

    token = "UNSTABLE_NOISE_FILTER"


class TooManyFailures(RivkitError):
    """More than the allowed fraction of Monte Carlo runs failed."""

    token = "MC_TOO_MANY_FAILURES"


class UnstableFilterWarning(UserWarning):
    """Filter denominator has roots on or outside the unit circle."""
