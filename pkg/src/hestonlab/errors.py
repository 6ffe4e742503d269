"""Exception hierarchy shared by all modules."""


class HestonLabError(Exception):
    pass


class DomainError(HestonLabError, ValueError):
    """Input outside the mathematical domain of an operation."""


class PreconditionError(HestonLabError, ValueError):
    """Input is valid but outside the regime where a result is claimed (e.g. nonzero drift)."""


class ConfigError(HestonLabError, ValueError):
    pass


class RangeError(HestonLabError, IndexError):
    pass


class InsufficientSamplesError(HestonLabError, ValueError):
    pass


class ResourceError(HestonLabError, MemoryError):
    pass
