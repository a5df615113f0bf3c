"""Setting up logging to the console and to a rotating file."""

import functools
import logging
from enum import Enum, unique
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Callable, List, Optional

from .resources import home_path, package_name
from .settings import get_setting

__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"


@unique
class LogTarget(Enum):
    """Log target with default logging level as value"""

    STREAM = {"id": "stream", "default": "INFO"}
    FILE = {"id": "file", "default": "NOTSET"}

    @property
    def id(self) -> str:
        return self.value["id"]

    @property
    def default_level(self) -> str:
        return self.value["default"]


def add_logging_handler_once(logger: logging.Logger, handler: logging.Handler) -> bool:
    """A helper to add a handler to a logger, ensuring there are no duplicates.

    :param logger: Logger that should have a handler added.
    :type logger: logging.logger

    :param handler: Handler instance to be added. It will not be added if an
        instance of that Handler subclass already exists.
    :type handler: logging.Handler

    :returns: True if the logging handler was added, otherwise False.
    :rtype: bool
    """
    class_name = handler.__class__.__name__
    for logger_handler in logger.handlers:
        if logger_handler.__class__.__name__ == class_name:
            return False

    logger.addHandler(handler)
    return True


def get_log_level_key(target: LogTarget) -> str:
    """Finds the settings key for log level"""
    return f"log_level/{target.id}"


def get_log_level_name(target: LogTarget) -> str:
    """Finds the log level name of the target"""
    return get_setting(get_log_level_key(target), target.default_level, str).upper()


def get_log_level(target: LogTarget) -> int:
    """Finds log level of the target"""
    level = logging.getLevelName(get_log_level_name(target))
    return level if isinstance(level, int) else logging.INFO


def get_log_folder() -> Optional[Path]:
    """
    Get Path to the log folder under PERIODFLOW_HOME.
    If it does not exist, create one.

    :return: Path to the log folder or None when no home is configured
    """
    log_dir = home_path("logs")
    if log_dir is None:
        return None
    log_dir.mkdir(parents=True, exist_ok=True)
    return log_dir


def _create_handlers(
    log_file_stem: str, stream_level: Optional[int] = None
) -> List[logging.Handler]:
    handlers: List[logging.Handler] = []

    if stream_level is None:
        stream_level = get_log_level(LogTarget.STREAM)
    if stream_level > logging.NOTSET:
        console_handler = logging.StreamHandler()
        console_handler.setLevel(stream_level)
        console_formatter = logging.Formatter(
            "%(asctime)s - %(levelname)s - %(message)s", "%d.%m.%Y %H:%M:%S"
        )
        console_handler.setFormatter(console_formatter)
        handlers.append(console_handler)

    file_level = get_log_level(LogTarget.FILE)
    log_folder = get_log_folder() if file_level > logging.NOTSET else None
    if log_folder is not None:
        log_file_name = (
            "".join((c if c.isalnum() else "_") for c in log_file_stem) + ".log"
        )
        file_handler = RotatingFileHandler(
            str(log_folder / log_file_name), maxBytes=1024 * 1024 * 2
        )
        file_handler.setLevel(file_level)
        file_formatter = logging.Formatter(
            "%(asctime)s - [%(levelname)-7s] - %(filename)s:%(lineno)d : %(message)s",
            "%d.%m.%Y %H:%M:%S",
        )
        file_handler.setFormatter(file_formatter)
        handlers.append(file_handler)

    # a logger with no enabled handler still gets a silent one so that
    # records do not leak to the root logger's last resort handler
    if not handlers:
        handlers.append(logging.NullHandler())

    return handlers


def setup_logger(
    logger_name: Optional[str] = None, stream_level: Optional[int] = None
) -> logging.Logger:
    """Enable logging for the package, typically once per CLI invocation.

    :param logger_name: The logger name that we want to set up.
    :param stream_level: Overrides the configured console level.

    Now to log a message do::
       LOGGER.debug('Some debug message')
    """
    if logger_name is None:
        logger_name = package_name()

    handlers = _create_handlers(logger_name, stream_level)
    logger = logging.getLogger(logger_name)

    # take the lowest level from the enabled handlers
    levels = [h.level for h in handlers if h.level > logging.NOTSET]
    logger.setLevel(min(levels) if levels else logging.WARNING)

    for handler in handlers:
        add_logging_handler_once(logger, handler)

    return logger


def teardown_logger(logger_name: Optional[str] = None) -> None:
    """Remove all handlers from the logger

    :param logger_name: The logger name that we want to tear down.
    """
    logger = logging.getLogger(logger_name or package_name())
    for handler in logger.handlers[:]:
        logger.removeHandler(handler)
        handler.close()


def teardown_loggers(logger_names: List[str]) -> None:
    """
    Remove the added handlers from the specified loggers.
    """
    for logger_name in logger_names:
        teardown_logger(logger_name)


def setup_loggers(
    *logger_names: str, stream_level: Optional[int] = None
) -> Callable[[], None]:
    """
    Setups all the loggers for the given logger names.

    Returns a teardown callback so the caller can undo the setup when done.
    """
    for logger_name in logger_names:
        setup_logger(logger_name, stream_level)

    return functools.partial(teardown_loggers, list(logger_names))
