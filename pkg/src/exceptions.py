class InvalidParameterError(ValueError):
    """Physical or structural parameter that the model cannot accept."""


class InvalidArgumentError(ValueError):
    """Argument outside the domain of an operation (negative SNR, zero slots, ...)."""


class InvalidStateError(RuntimeError):
    """Operation called in a regime where it is not defined."""


class NumericFailureError(ArithmeticError):
    """
    Numerical routine did not reach the requested accuracy.

    Attributes:
        achieved_tolerance: Error estimate reported by the routine
        partial_value: Best value obtained before giving up
    """

    def __init__(self, message: str, achieved_tolerance: float, partial_value: float):
        super().__init__(message)
        self.achieved_tolerance = achieved_tolerance
        self.partial_value = partial_value


class InternalInconsistencyError(RuntimeError):
    """An identity that holds by construction was violated."""


class ConfigError(ValueError):
    """Experiment configuration cannot be read or interpreted."""
