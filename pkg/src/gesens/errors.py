"""Exception and warning types shared across the package."""


class ConfigError(ValueError):
    """Invalid problem or solver configuration (bad constants, wrong Gram, ...)."""


class DimensionError(ValueError):
    """Vector length does not match the owning space."""


class NonConverged(RuntimeError):
    """An iteration hit its budget before meeting its stopping rule.

    The partial report, when one exists, is attached as ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NonConvergedDerivative(RuntimeError):
    """Difference quotients of a resolvent drift more than allowed."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class SmallnessViolated(ConfigError):
    """L_Phi is too large for either smallness regime of the QVI theory."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class InconsistentSolution(RuntimeError):
    """A computed solution fails the resolvent identity it must satisfy."""


class ContractionViolation(UserWarning):
    """Measured contraction factor exceeds the one predicted by the metadata."""
