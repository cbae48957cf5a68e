"""Exception hierarchy shared across the package."""


class HfguideError(Exception):
    """Base class for package errors."""


class InvalidArgumentError(HfguideError, ValueError):
    """A precondition on an operation's arguments was violated."""


class MalformedImageError(HfguideError):
    """An image file could not be parsed (bad header, truncated payload)."""


class UnsupportedFormatError(HfguideError):
    """The requested image format is not one of PPM/PGM/PNG."""


class NumericsError(HfguideError):
    """A non-finite value was detected in sampler or model state."""


class ConfigError(HfguideError):
    """A run configuration file failed to parse or validate."""
