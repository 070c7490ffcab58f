import functools
import inspect
import logging
import os
import random
import sys
import uuid
from typing import IO, Any, Callable, Dict, Iterable, Optional, TypeVar, Union

from ..shared import constants
from ..shared.functions import resolve_env_var_choice, resolve_truthy_env_var_choice
from .exceptions import InvalidLoggerSamplingRateError
from .filters import SuppressFilter
from .formatter import BaseDrgoFormatter, DrgoFormatter

logger = logging.getLogger(__name__)

DrgoFormatterT = TypeVar("DrgoFormatterT", bound=BaseDrgoFormatter)

# logging.Logger keyword arguments; anything else passed to a log call becomes a structured key
_LOG_CALL_KWARGS = ("exc_info", "stack_info", "stacklevel", "extra")


class Logger(logging.Logger):  # lgtm [py/missing-call-to-init]
    """Creates and setups a logger to format statements in JSON.

    Includes service name and any additional key=value into logs.
    It also accepts both service name or level explicitly via env vars.

    Environment variables
    ---------------------
    DRGO_SERVICE_NAME : str
        service name
    LOG_LEVEL: str
        logging level (e.g. INFO, DEBUG)
    DRGO_LOGGER_SAMPLE_RATE: float
        sampling rate ranging from 0 to 1, 1 being 100% sampling

    Parameters
    ----------
    service : str, optional
        service name to be appended in logs, by default "drgo"
    level : str, int optional
        logging.level, by default "INFO"
    child: bool, optional
        create a child Logger named <service>.<caller_file_name>, False by default
    sampling_rate: float, optional
        sample rate for debug calls within a run, defaults to 0.0
    stream: sys.stdout, optional
        valid output for a logging stream, by default sys.stderr
    logger_formatter: DrgoFormatter, optional
        custom logging formatter that implements BaseDrgoFormatter
    logger_handler: logging.Handler, optional
        custom logging handler e.g. logging.FileHandler("run.log")

    Example
    -------
    **Structured logging of a training epoch**

        >>> from drgo import Logger
        >>> logger = Logger(service="drgo")
        >>> logger.info("epoch finished", epoch=3, recall_at_20=0.12)

    **Append run keys to every subsequent statement**

        >>> logger.append_keys(run_id="a1b2", seed=7)

    Raises
    ------
    InvalidLoggerSamplingRateError
        When sampling rate provided is not a float
    """

    def __init__(
        self,
        service: Optional[str] = None,
        level: Union[str, int, None] = None,
        child: bool = False,
        sampling_rate: Optional[float] = None,
        stream: Optional[IO[str]] = None,
        logger_formatter: Optional[DrgoFormatterT] = None,
        logger_handler: Optional[logging.Handler] = None,
        **kwargs,
    ):
        self.service = resolve_env_var_choice(
            choice=service, env=os.getenv(constants.SERVICE_NAME_ENV, constants.DEFAULT_SERVICE_NAME)
        )
        self.sampling_rate = resolve_env_var_choice(
            choice=sampling_rate, env=os.getenv(constants.LOGGER_LOG_SAMPLING_RATE)
        )
        self.child = child
        self.logger_formatter = logger_formatter
        self.logger_handler = logger_handler or logging.StreamHandler(stream)
        self.log_level = self._get_log_level(level)
        self._is_deduplication_disabled = resolve_truthy_env_var_choice(
            env=os.getenv(constants.LOGGER_LOG_DEDUPLICATION_ENV, "false")
        )
        self._default_log_keys = {"service": self.service, "sampling_rate": self.sampling_rate}
        self._logger = self._get_logger()
        self._init_logger(**kwargs)

    def __getattr__(self, name):
        # Proxy attributes not found to actual logger
        return getattr(self._logger, name)

    def _get_logger(self):
        """Returns a Logger named {self.service}, or {self.service.filename} for child loggers"""
        logger_name = self.service
        if self.child:
            logger_name = f"{self.service}.{self._get_caller_filename()}"

        return logging.getLogger(logger_name)

    def _init_logger(self, **kwargs):
        """Configures new logger"""

        # Skip configuration if it's a child logger or a pre-configured logger
        # so handlers and sampling aren't attached twice
        is_logger_preconfigured = getattr(self._logger, "init", False)
        if self.child or is_logger_preconfigured:
            return

        self._configure_sampling()
        self._logger.setLevel(self.log_level)
        self._logger.addHandler(self.logger_handler)
        self._logger.propagate = False
        self.structure_logs(**kwargs)

        if not self._is_deduplication_disabled:
            logger.debug("Adding filter in root logger to suppress child logger records to bubble up")
            for handler in logging.root.handlers:
                handler.addFilter(SuppressFilter(self.service))

        logger.debug(f"Marking logger {self.service} as preconfigured")
        self._logger.init = True

    def _configure_sampling(self):
        """Dynamically set log level based on sampling rate

        Raises
        ------
        InvalidLoggerSamplingRateError
            When sampling rate provided is not a float
        """
        try:
            if self.sampling_rate and random.random() <= float(self.sampling_rate):
                logger.debug("Setting log level to Debug due to sampling rate")
                self.log_level = logging.DEBUG
        except ValueError:
            raise InvalidLoggerSamplingRateError(
                f"Expected a float value ranging 0 to 1, but received {self.sampling_rate} instead."
                f"Please review DRGO_LOGGER_SAMPLE_RATE environment variable."
            )

    def inject_run_context(
        self,
        command: Optional[Callable[..., Any]] = None,
        run_id: Optional[str] = None,
        clear_state: Optional[bool] = False,
    ):
        """Decorator appending run keys (command name, run id, seed) to every statement of a command

        The decorated callable must accept the seed as keyword argument `seed` or carry it in a
        `config` keyword argument exposing a `seed` attribute; both are optional.

        Example
        -------
            logger = Logger()

            @logger.inject_run_context
            def train_command(config, split):
                logger.info("Starting")
        """
        if command is None:
            logger.debug("Decorator called with parameters")
            return functools.partial(self.inject_run_context, run_id=run_id, clear_state=clear_state)

        @functools.wraps(command)
        def decorate(*args, **kwargs):
            seed = kwargs.get("seed")
            if seed is None and "config" in kwargs:
                seed = getattr(kwargs["config"], "seed", None)
            run_keys = {"command": command.__name__, "run_id": run_id or uuid.uuid4().hex[:12], "seed": seed}

            if clear_state:
                self.structure_logs(**run_keys)
            else:
                self.append_keys(**run_keys)

            return command(*args, **kwargs)

        return decorate

    def append_keys(self, **additional_keys):
        self.registered_formatter.append_keys(**additional_keys)

    def remove_keys(self, keys: Iterable[str]):
        self.registered_formatter.remove_keys(keys)

    @property
    def registered_handler(self) -> logging.Handler:
        """Convenience property to access logger handler"""
        handlers = self._logger.parent.handlers if self.child else self._logger.handlers
        return handlers[0]

    @property
    def registered_formatter(self) -> BaseDrgoFormatter:
        """Convenience property to access logger formatter"""
        return self.registered_handler.formatter  # type: ignore

    def structure_logs(self, **keys):
        """Sets logging formatting to JSON, or resets the registered formatter keeping only `keys`"""
        log_keys = {**self._default_log_keys, **keys}
        is_logger_preconfigured = getattr(self._logger, "init", False)
        if not is_logger_preconfigured:
            formatter = self.logger_formatter or DrgoFormatter(**log_keys)  # type: ignore
            return self.registered_handler.setFormatter(formatter)

        self.registered_formatter.clear_state()
        self.registered_formatter.append_keys(**log_keys)

    @staticmethod
    def _split_kwargs(kwargs: Dict[str, Any]) -> Dict[str, Any]:
        """Move structured keys into `extra` so std logging accepts them"""
        call_kwargs = {k: v for k, v in kwargs.items() if k in _LOG_CALL_KWARGS}
        structured = {k: v for k, v in kwargs.items() if k not in _LOG_CALL_KWARGS}
        if structured:
            call_kwargs["extra"] = {**call_kwargs.get("extra", {}), **structured}
        call_kwargs.setdefault("stacklevel", 2)
        return call_kwargs

    def debug(self, msg: Any, *args, **kwargs):  # type: ignore[override]
        self._logger.debug(msg, *args, **self._split_kwargs(kwargs))

    def info(self, msg: Any, *args, **kwargs):  # type: ignore[override]
        self._logger.info(msg, *args, **self._split_kwargs(kwargs))

    def warning(self, msg: Any, *args, **kwargs):  # type: ignore[override]
        self._logger.warning(msg, *args, **self._split_kwargs(kwargs))

    def error(self, msg: Any, *args, **kwargs):  # type: ignore[override]
        self._logger.error(msg, *args, **self._split_kwargs(kwargs))

    def exception(self, msg: Any, *args, **kwargs):  # type: ignore[override]
        kwargs.setdefault("exc_info", True)
        self._logger.error(msg, *args, **self._split_kwargs(kwargs))

    @staticmethod
    def _get_log_level(level: Union[str, int, None]) -> Union[str, int]:
        """Returns preferred log level set by the caller in upper case"""
        if isinstance(level, int):
            return level

        log_level: Optional[str] = level or os.getenv("LOG_LEVEL")
        if log_level is None:
            return logging.INFO

        return log_level.upper()

    @staticmethod
    def _get_caller_filename():
        """Return caller filename by finding the caller frame"""
        # Current frame         => _get_logger()
        # Previous frame        => logger.py
        # Before previous frame => Caller
        frame = inspect.currentframe()
        caller_frame = frame.f_back.f_back.f_back
        return caller_frame.f_globals["__name__"]


def set_package_logger(
    level: Union[str, int] = logging.DEBUG,
    stream: Optional[IO[str]] = None,
    formatter: Optional[logging.Formatter] = None,
):
    """Set an additional stream handler, formatter, and log level for the drgo package logger.

    **Package log by default is suppressed (NullHandler), this should only used for debugging.
    This is separate from the run Logger class utility**

    Example
    -------
    **Enables debug logging for the drgo package**

        >>> from drgo.logging.logger import set_package_logger
        >>> set_package_logger()

    Parameters
    ----------
    level: str, int
        log level, DEBUG by default
    stream: sys.stdout
        log stream, stdout by default
    formatter: logging.Formatter
        log formatter, "%(asctime)s %(name)s [%(levelname)s] %(message)s" by default
    """
    if formatter is None:
        formatter = logging.Formatter("%(asctime)s %(name)s [%(levelname)s] %(message)s")

    if stream is None:
        stream = sys.stdout

    logger = logging.getLogger("drgo")
    logger.setLevel(level)
    handler = logging.StreamHandler(stream)
    handler.setFormatter(formatter)
    logger.addHandler(handler)
