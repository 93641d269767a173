""" Exception hierarchy and CLI exit codes
"""

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4


class RfsfError(Exception):
    """Base class for all package errors."""


class ConfigError(RfsfError, ValueError):
    """Invalid or inconsistent configuration."""


class ContractError(RfsfError, ValueError):
    """An operation precondition was violated."""


class DimensionError(RfsfError, ValueError):
    """Array shapes do not agree."""


class FormatError(RfsfError, ValueError):
    """Malformed file or container."""


class NumericalError(RfsfError, FloatingPointError):
    """Non-finite loss or gradient during training."""

    def __init__(self, msg, epoch=None, batch=None):
        self.epoch = epoch
        self.batch = batch
        if epoch is not None:
            msg = f'{msg} (epoch {epoch}, batch {batch})'
        super().__init__(msg)
