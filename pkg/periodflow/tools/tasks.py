import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, List, Optional, Sequence

from .exceptions import PeriodFlowException

LOGGER = logging.getLogger(__name__)

__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"


class BaseTask:
    """
    Base class for units of work fanned out to a worker pool.
    Captures the exception of a failed run and logs the outcome.
    """

    def __init__(self) -> None:
        self.exception: Optional[Exception] = None
        self._started_at: Optional[float] = None
        self._elapsed: float = 0.0

    @property
    def name(self) -> str:
        return self.__class__.__name__

    def run(self) -> bool:
        """
        Run the task.

        :return: whether task finished successfully or not.
        """

        LOGGER.debug(f"Started task {self.name}")
        self._started_at = time.perf_counter()
        try:
            return self._run()
        except Exception as e:  # noqa: PIE786
            self.exception = e
            return False
        finally:
            self._elapsed = time.perf_counter() - self._started_at

    def finished(self, result: bool) -> None:
        """
        Called by the runner in the submitting thread when the task has
        completed (successfully or not).

        :param result: the return value from self.run
        """
        if result:
            LOGGER.debug(
                f"Task {self.name} ended successfully in {self._elapsed:.2f} s"
            )
        elif self.exception is None:
            LOGGER.warning(
                f"Task {self.name} was not successful: "
                "the task reported failure without an exception"
            )
        else:
            try:
                raise self.exception
            except PeriodFlowException as e:
                LOGGER.error(f"{self.name}: {e}", extra={"details": e.details})
            except Exception:
                LOGGER.exception(f"{self.name}: Unhandled exception occurred")

    def _run(self) -> bool:
        """
        Do the work. Must not touch shared mutable state: tasks run
        concurrently in worker threads.
        """
        raise NotImplementedError()

class FunctionTask(BaseTask):
    """
    Utility class for creating a task out of a function.
    """

    def __init__(self, callback_function: Callable, name: Optional[str] = None) -> None:
        super().__init__()
        self._callback_function = callback_function
        self._name = name
        self.result: Any = None

    @property
    def name(self) -> str:
        return self._name or super().name

    def _run(self) -> bool:
        self.result = self._callback_function()
        return True


def run_tasks(tasks: Sequence[BaseTask], workers: int = 1) -> List[bool]:
    """
    Run tasks on a bounded thread pool and report their outcome in order.

    finished is called for every task from the calling thread, in submission
    order, after all tasks have run.
    :param tasks: tasks to run
    :param workers: maximum number of worker threads
    :return: the run result of each task
    """
    if workers <= 1 or len(tasks) <= 1:
        results = [task.run() for task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(lambda task: task.run(), tasks))

    for task, result in zip(tasks, results):
        task.finished(result)
    return results
