"""Exception types raised across the package."""


class Coarse2FineError(Exception):
    """Base class for all package errors."""


class NotVertical(Coarse2FineError, ValueError):
    """A pose lies outside the vertical (pure-yaw) approach space."""


class RegionViolation(Coarse2FineError, ValueError):
    """The end-effector height does not match the sensor's training region."""


class EmptyDataset(Coarse2FineError, ValueError):
    pass


class InsufficientData(Coarse2FineError, ValueError):
    pass


class EmptyStream(Coarse2FineError, ValueError):
    pass


class BelowTable(Coarse2FineError, ValueError):
    """A demonstration starts at or below the table surface."""


class InvalidParams(Coarse2FineError, ValueError):
    pass


class ConfigError(Coarse2FineError, ValueError):
    pass


class MissingDataset(Coarse2FineError, RuntimeError):
    """Trained sensor models are required but were not supplied."""


class IoError(Coarse2FineError, OSError):
    pass
