"""Exception types shared across the package."""


class SirsLabError(Exception):
    """Base class for all errors raised by sirslab."""


class InvalidParameterError(SirsLabError, ValueError):
    """A caller-supplied parameter is outside its documented domain."""


class DomainError(SirsLabError, ValueError):
    """A mathematical function was evaluated outside its domain."""


class DegenerateDegreeError(SirsLabError, ValueError):
    """The graph has a vertex of degree zero where positive degree is needed."""


class SizeError(SirsLabError, ValueError):
    """The instance is too large for the requested exact method."""


class NumericError(SirsLabError, ArithmeticError):
    """A numerical solve failed or did not reach its residual tolerance."""


class GenerationError(SirsLabError, RuntimeError):
    """A randomized generator gave up after exhausting its retries."""


class InvariantViolation(SirsLabError, AssertionError):
    """An internal consistency check of the simulation state failed."""


class ConfigError(InvalidParameterError):
    """An experiment configuration failed validation.

    ``path`` names the offending field, e.g. ``"graph.p"``.
    """

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class FitError(InvalidParameterError):
    """A regression was requested on too few or degenerate points."""
