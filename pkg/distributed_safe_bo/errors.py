from typing import Any, Optional


class SafeBoError(Exception):
    def __init__(self, message: str, expression: Optional[Any] = None):
        super().__init__(message)
        self.message = message
        self.expression = expression


class ConfigError(SafeBoError, ValueError):
    """Invalid hyperparameters, configuration keys or values. `expression` holds the key path."""


class InputError(SafeBoError, ValueError):
    """Arguments outside the domain of an operation."""


class NumericalError(SafeBoError, ArithmeticError):
    """Factorization failures and non-finite simulation states."""


class InternalError(SafeBoError, RuntimeError):
    """An invariant that holds by construction was violated."""


class OracleError(SafeBoError, RuntimeError):
    def __init__(self, message: str, expression: Optional[Any] = None, partial_result: Optional[Any] = None):
        super().__init__(message, expression)
        self.partial_result = partial_result


__all__ = ["SafeBoError", "ConfigError", "InputError", "NumericalError", "InternalError", "OracleError"]
