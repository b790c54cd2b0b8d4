"""Error taxonomy shared across the package."""


class ContractViolationError(ValueError):
    """An argument violates a documented precondition (e.g. dimension mismatch)."""


class NumericalDomainError(ArithmeticError):
    """A computation left the representable domain (overflow, non-finite result).

    Carries the offending inputs in ``context`` for post-mortem inspection.
    """

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context


class DomainError(ValueError):
    """An input lies outside the mathematical domain (e.g. theta outside prior support)."""


class ConfigurationError(ValueError):
    """A run configuration is invalid (detected before any computation starts)."""
