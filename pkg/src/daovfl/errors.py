"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class DomainError(ValueError):
    """A value lies outside its documented domain (e.g. a bad label)."""


class NumericError(ArithmeticError):
    """Non-finite values where finite ones are required, or divergence."""


class ProtocolError(RuntimeError):
    """A round was driven out of its documented order (missing block, ...)."""


class StateError(RuntimeError):
    """Operation invoked on an object in the wrong lifecycle state."""
