import threading
import time
from typing import Optional, Type

from ..tools.tasks import BaseTask

__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"


class SimpleTask(BaseTask):
    """Task that sleeps in steps and optionally fails."""

    def __init__(
        self,
        fail: bool = False,
        exception_class: Type[Exception] = ValueError,
        steps: int = 10,
        delay: float = 0.01,
    ) -> None:
        super().__init__()
        self.fail = fail
        self.exception_class = exception_class
        self.steps = steps
        self.delay = delay
        self.steps_done = 0

    def _run(self) -> bool:
        for _ in range(self.steps):
            time.sleep(self.delay)
            self.steps_done += 1
        if self.fail:
            raise self.exception_class("custom failure")
        return True


class TestTaskRunner:
    """Runs a single task on a worker thread the way run_tasks does."""

    __test__ = False

    def __init__(self) -> None:
        self.success = False
        self.fail = False

    def run_task(self, task: BaseTask) -> bool:
        result: Optional[bool] = None

        def target() -> None:
            nonlocal result
            result = task.run()

        thread = threading.Thread(target=target)
        thread.start()
        thread.join()

        task.finished(bool(result))
        self.success = bool(result)
        self.fail = not result
        return bool(result)
