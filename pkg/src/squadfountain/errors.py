"""Exception types shared across the package."""


class SquadFountainError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(SquadFountainError, ValueError):
    """An argument is outside the documented domain."""


class MalformedInputError(SquadFountainError, ValueError):
    """Structurally invalid input data (e.g. out-of-range symbol neighbors)."""


class StalledDecoderError(SquadFountainError, RuntimeError):
    """A ripple operation was requested while the ripple is empty."""


class DopingUnavailableError(SquadFountainError, RuntimeError):
    """The source-packet oracle could not supply a requested packet."""


class ExhaustedNetworkError(SquadFountainError, RuntimeError):
    """The network does not hold enough storage nodes for a collection."""


class DivergedError(SquadFountainError, RuntimeError):
    """An iterative computation failed to terminate within its guard bound."""


class ConfigError(SquadFountainError, ValueError):
    """A configuration file or flag set could not be parsed."""
