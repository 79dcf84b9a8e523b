"""Exception hierarchy shared by all grnlab modules."""


class GrnlabError(Exception):
    """Base class for all grnlab errors."""


class ParameterError(GrnlabError):
    """A scalar model parameter violates its standing inequality."""


class RateError(GrnlabError):
    """A rate table is malformed or not strictly positive."""


class DomainError(GrnlabError):
    """Data lives (partly) outside the interval it must be supported on."""


class SizeMismatch(GrnlabError):
    """Two grid objects that must share a resolution do not."""


class NonMonotoneMap(GrnlabError):
    """A remap was given cell edges that are not strictly monotone."""


class NegativeTime(GrnlabError):
    """A semigroup/flow was asked to run for t < 0."""


class NonpositiveLambda(GrnlabError):
    """A resolvent was requested at lambda <= 0."""


class BadMode(GrnlabError):
    """A PDMP mode outside {1, 2}."""


class EmptyEnsemble(GrnlabError):
    """A particle ensemble with no particles."""


class NonpositiveRateBound(GrnlabError):
    """Thinning upper bound came out <= 0 (impossible for a valid model)."""


class QuadratureFailure(GrnlabError):
    """Stationary-density quadrature hit a non-integrable endpoint."""


class InversionFailure(GrnlabError):
    """Bisection inversion of the flow map failed to bracket its target."""


class ConfigError(GrnlabError):
    """A run configuration is incomplete or inconsistent."""
