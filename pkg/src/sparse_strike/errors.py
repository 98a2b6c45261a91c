"""Exception hierarchy shared by all modules."""


class SparseStrikeError(Exception):
    """Base class for every error raised by this package."""


class BoundsError(SparseStrikeError, IndexError):
    pass


class ShapeError(SparseStrikeError, ValueError):
    pass


class DomainError(SparseStrikeError, ValueError):
    """A pixel value outside [0, 255]."""


class PolicyParseError(SparseStrikeError, ValueError):
    pass


class PolicyValidationError(SparseStrikeError, ValueError):
    pass


class ConfigError(SparseStrikeError, ValueError):
    pass


class InputError(SparseStrikeError, ValueError):
    pass


class LifecycleError(SparseStrikeError, RuntimeError):
    """Stepping an environment that has already finished."""
