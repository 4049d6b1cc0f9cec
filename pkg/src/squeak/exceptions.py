"""Exception hierarchy shared by every module of the package."""


class SqueakError(Exception):
    """Base class for all package errors."""


class InputError(SqueakError, ValueError):
    """Malformed arguments: wrong shapes, out-of-range indices or parameters."""


class NumericalDomainError(SqueakError, ArithmeticError):
    """A matrix that must be positive semidefinite is not, beyond tolerance."""


class ContractViolation(SqueakError, RuntimeError):
    """A caller broke an algorithmic precondition (e.g. re-estimating a dropped column)."""


class ConfigError(SqueakError, ValueError):
    """Invalid experiment configuration or unreadable dataset."""
