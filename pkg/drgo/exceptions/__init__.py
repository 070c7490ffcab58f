"""Shared exceptions that don't belong to a single package"""


class DrgoError(Exception):
    """Base class for every error raised by drgo

    Each family sets `exit_code` so the CLI can map failures without inspecting messages. Failures
    outside the usage and divergence families count as data errors.
    """

    exit_code: int = 3


class DataError(DrgoError):
    """Input data can't be used as given (files, graphs, splits)"""

    exit_code = 3


class UsageError(DrgoError):
    """Invalid arguments or configuration supplied by the operator"""

    exit_code = 2


class ConfigError(UsageError):
    """Configuration file or override can't be parsed or validated"""
