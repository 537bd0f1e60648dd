"""Exception hierarchy shared by every module."""


class BurkholderError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(BurkholderError, ValueError):
    """Invalid grid, ensemble or experiment configuration."""


class UsageError(BurkholderError, ValueError):
    """Arguments are individually valid but used inconsistently."""


class DomainError(BurkholderError, ValueError):
    """A parameter lies outside the mathematical domain of an operation."""


class UnsupportedParameterError(DomainError):
    """A parameter is mathematically meaningful but not implemented."""
