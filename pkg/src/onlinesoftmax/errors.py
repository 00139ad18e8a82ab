"""Exception types raised at operation boundaries."""


class SoftmaxError(ValueError):
    """Base class for invalid arguments to any kernel or reduction."""


class EmptyInput(SoftmaxError):
    pass


class NonFiniteInput(SoftmaxError):
    pass


class InvalidChunk(SoftmaxError):
    pass


class InvalidK(SoftmaxError):
    pass


class ConfigError(ValueError):
    """Raised for an unusable benchmark sweep configuration."""
