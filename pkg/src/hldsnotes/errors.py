"""Exception hierarchy shared by every stage of the pipeline."""


class HldsError(Exception):
    """Base class for all errors raised by this package."""


class ContractError(HldsError, ValueError):
    """Arguments violate a documented precondition (shapes, ranges)."""


class ConfigurationError(HldsError, ValueError):
    """Model, synthesis or run configuration is invalid."""


class InputError(HldsError, ValueError):
    """User-supplied data (audio, label or model files) is unusable."""


class NumericalDegeneracyError(HldsError, ArithmeticError):
    """A matrix that must be positive definite is not."""


class TrainingError(HldsError):
    """Class models cannot be fitted from the supplied annotations."""
