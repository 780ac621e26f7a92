"""Exception types raised by the solver."""


class InvalidArgumentError(ValueError):
    pass


class DomainError(ValueError):
    """Input lies outside the mathematical domain of an operation."""


class UnsupportedModelError(ValueError):
    pass


class NumericalError(RuntimeError):
    """A simulation produced NaN/Inf or unrecoverable negative values."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
