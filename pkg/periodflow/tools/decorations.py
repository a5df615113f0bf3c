__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"

import logging
from functools import wraps
from typing import Any, Callable

from .exceptions import EXIT_INTERNAL, EXIT_OK, PeriodFlowException
from .tasks import FunctionTask

LOGGER = logging.getLogger(__name__)


def log_if_fails(fn: Callable) -> Callable[..., int]:
    """
    Use this as a decorator with command functions that
    might throw uncaught exceptions. The wrapped function returns
    a process exit code instead of raising.
    """

    @wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> int:  # noqa: ANN001
        try:
            result = fn(*args, **kwargs)
        except PeriodFlowException as e:
            LOGGER.error(str(e), extra={"details": e.details})
            for key, value in e.details.items():
                LOGGER.error(f"  {key}: {value}")
            return e.exit_code
        except OSError as e:
            LOGGER.error(f"I/O error: {e}")
            return PeriodFlowException.exit_code
        except Exception:
            LOGGER.exception("Unhandled exception occurred")
            return EXIT_INTERNAL
        return EXIT_OK if result is None else int(result)

    return wrapper


def taskify(fn: Callable) -> Callable[..., FunctionTask]:
    """
    Decoration used to turn any function or method into a FunctionTask task.
    """

    @wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> FunctionTask:  # noqa: ANN001
        return FunctionTask(lambda: fn(*args, **kwargs), name=fn.__name__)

    return wrapper
