__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"

import logging
import time

from ..testing.utilities import TestTaskRunner
from ..tools.decorations import log_if_fails, taskify
from ..tools.exceptions import (
    EXIT_DATA,
    EXIT_INTERNAL,
    EXIT_OK,
    EXIT_USAGE,
    InvalidSetting,
    NoPeriodicity,
)


@log_if_fails
def function_that_fails(arg, arg2, kwarg1=None, kwarg2=None):
    raise ValueError("Error message")


@log_if_fails
def function_that_shows_details():
    raise NoPeriodicity("Error message", {"T": 12})


@log_if_fails
def function_that_succeeds(value=None):
    return value


@taskify
def function_that_runs_as_a_task(arg, kwarg=None):
    for _ in range(10):
        time.sleep(0.01)
    return arg, kwarg


class MockClass:
    @log_if_fails
    def method_that_fails(self, arg, arg2, kwarg1=None, kwarg2=None):
        raise ValueError("M: Error message")

    @log_if_fails
    def method_with_bad_setting(self):
        raise InvalidSetting("M: Error message")

    @taskify
    def method_that_runs_as_a_task(self):
        for _ in range(10):
            time.sleep(0.01)
        return True


def test_logging_if_fails(initialize_logger, caplog):
    with caplog.at_level(logging.ERROR):
        code = function_that_shows_details()

    assert code == EXIT_DATA
    assert "Error message" in caplog.text
    assert "T: 12" in caplog.text


def test_logging_if_fails_method(initialize_logger, caplog):
    with caplog.at_level(logging.ERROR):
        code = MockClass().method_with_bad_setting()

    assert code == EXIT_USAGE
    assert "M: Error message" in caplog.text


def test_logging_if_fails_without_details(initialize_logger, caplog):
    with caplog.at_level(logging.ERROR):
        code = function_that_fails(1, 2, 3, kwarg2=4)

    assert code == EXIT_INTERNAL
    assert "Unhandled exception occurred" in caplog.text
    assert "Error message" in caplog.text


def test_logging_if_fails_without_details_method(initialize_logger, caplog):
    with caplog.at_level(logging.ERROR):
        code = MockClass().method_that_fails(1, 2, 3, kwarg2=4)

    assert code == EXIT_INTERNAL
    assert "M: Error message" in caplog.text


def test_log_if_fails_passes_return_code():
    assert function_that_succeeds() == EXIT_OK
    assert function_that_succeeds(EXIT_DATA) == EXIT_DATA


def test_log_if_fails_maps_os_errors(initialize_logger):
    @log_if_fails
    def unwritable():
        raise PermissionError("read-only")

    assert unwritable() == EXIT_DATA


def test_taskify(task_runner: TestTaskRunner):
    task = function_that_runs_as_a_task(1, kwarg=2)
    success = task_runner.run_task(task)

    assert success
    assert task.result == (1, 2)
    assert task.name == "function_that_runs_as_a_task"


def test_taskify_method(task_runner: TestTaskRunner):
    task = MockClass().method_that_runs_as_a_task()
    success = task_runner.run_task(task)

    assert success
    assert task.result is True
