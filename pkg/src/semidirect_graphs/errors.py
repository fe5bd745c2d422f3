"""Exception types raised across the package."""


class SemidirectError(Exception):
    """Base class for all package errors."""


class ExponentOverflow(SemidirectError, OverflowError):
    """Height (or matrix scale) too large for a finite matrix exponential."""


class StencilError(SemidirectError, ValueError):
    """A grid node lacks the neighbours its finite-difference stencil needs."""


class NoBranchError(SemidirectError, ValueError):
    """Neither lower bound on the metric coefficients holds (diagonal matrix)."""


class NoCertificateError(SemidirectError, ValueError):
    """No admissible constant exists for the requested parameters."""


class ProfileUnavailable(SemidirectError, ValueError):
    """The exhaustion profile cannot be built for this segment length."""


class SolverBreakdown(SemidirectError, RuntimeError):
    """The Newton linear system became singular.

    ``diagnostics`` carries whatever the solver knew when it stopped.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SingleCrossingViolation(SemidirectError, ValueError):
    """A Killing orbit line meets the discrete graph more than once."""


class DomainError(SemidirectError, ValueError):
    """Argument outside the domain where a formula is defined."""


class ConfigError(SemidirectError, ValueError):
    """Invalid experiment configuration."""
