import logging
import time

from ..testing.utilities import SimpleTask, TestTaskRunner
from ..tools.exceptions import PeriodFlowException
from ..tools.tasks import BaseTask, FunctionTask, run_tasks

__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"


def fn(*args, **kwargs):  # noqa
    for _ in range(10):
        time.sleep(0.01)
    return args, kwargs


def test_run_simple_task(task_runner: TestTaskRunner):
    task = SimpleTask()
    success = task_runner.run_task(task)

    assert success
    assert task.steps_done == 10
    assert task.exception is None


def test_run_simple_task_failed(task_runner: TestTaskRunner, caplog):
    task = SimpleTask(True)
    with caplog.at_level(logging.ERROR):
        success = task_runner.run_task(task)

    assert not success
    assert task_runner.fail
    assert "SimpleTask: Unhandled exception occurred" in caplog.text
    assert "custom failure" in caplog.text


def test_run_simple_task_failed_with_package_exception(
    task_runner: TestTaskRunner, caplog
):
    task = SimpleTask(True, PeriodFlowException)
    with caplog.at_level(logging.ERROR):
        success = task_runner.run_task(task)

    assert not success
    assert task_runner.fail
    assert "SimpleTask: custom failure" in caplog.text
    assert "Unhandled" not in caplog.text


def test_function_task_without_params(task_runner: TestTaskRunner):
    task = FunctionTask(fn)
    success = task_runner.run_task(task)

    assert success
    assert task.result == ((), {})


def test_function_task_with_params(task_runner: TestTaskRunner):
    task = FunctionTask(lambda: fn(1, 2, a=1, b=2))
    success = task_runner.run_task(task)

    assert success
    assert task.result == ((1, 2), {"a": 1, "b": 2})


def test_function_task_name():
    assert FunctionTask(fn).name == "FunctionTask"
    assert FunctionTask(fn, name="mine").name == "mine"


def test_run_tasks_keeps_submission_order():
    tasks = [FunctionTask(lambda i=i: fn(i)) for i in range(6)]
    results = run_tasks(tasks, workers=3)

    assert results == [True] * 6
    assert [task.result[0] for task in tasks] == [(i,) for i in range(6)]


def test_run_tasks_reports_failures_in_place():
    def fail():
        raise PeriodFlowException("broken")

    tasks = [FunctionTask(lambda: 1), FunctionTask(fail), FunctionTask(lambda: 3)]
    results = run_tasks(tasks, workers=2)

    assert results == [True, False, True]
    assert isinstance(tasks[1].exception, PeriodFlowException)
    assert tasks[2].result == 3


def test_task_failing_without_exception_is_a_warning(caplog):
    class Refusing(BaseTask):
        def _run(self):
            return False

    task = Refusing()
    with caplog.at_level(logging.WARNING):
        assert run_tasks([task]) == [False]

    assert task.exception is None
    assert "Task Refusing was not successful" in caplog.text
