"""Exception hierarchy shared by the integrator, the models and the CLI."""


class CollectiveDecayError(Exception):
    """Base class for all package errors."""


class IntegrationError(CollectiveDecayError):
    """Raised when an initial-value problem cannot be integrated."""


class StepUnderflow(IntegrationError):
    pass


class MaxStepsExceeded(IntegrationError):
    pass


class NonFiniteState(IntegrationError):
    pass


class BoundViolation(IntegrationError):
    """A mean-field occupation left its physical range by more than the allowed slack."""


class NoCrossing(CollectiveDecayError):
    pass


class ThresholdNotReached(CollectiveDecayError):
    pass


class EmptyTrajectory(CollectiveDecayError):
    pass


class OracleError(CollectiveDecayError):
    pass


class UnknownMode(OracleError):
    pass


class TruncationTooSmall(OracleError):
    pass


class CapExceeded(OracleError):
    pass


class DimensionMismatch(OracleError):
    pass


class NonPhysicalState(OracleError):
    pass


class ConfigInvalid(CollectiveDecayError):
    """Invalid scenario configuration; ``field`` holds the dotted path at fault."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message
