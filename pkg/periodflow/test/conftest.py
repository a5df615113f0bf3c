# type: ignore
# flake8: noqa ANN201

__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"

import os

import pytest

from ..testing.utilities import TestTaskRunner
from ..tools.custom_logging import setup_logger, teardown_logger
from ..tools.datagen import GenSpec, generate_item
from ..tools.resources import HOME_ENV_VAR, package_name
from ..tools.settings import reset_settings


@pytest.fixture(autouse=True)
def clean_settings(monkeypatch):
    for key in list(os.environ):
        if key.startswith(package_name().upper() + "_"):
            monkeypatch.delenv(key)
    monkeypatch.delenv(HOME_ENV_VAR, raising=False)
    reset_settings()
    yield
    reset_settings()


@pytest.fixture()
def initialize_logger():
    setup_logger(package_name())
    yield
    teardown_logger(package_name())


@pytest.fixture()
def task_runner(initialize_logger):
    return TestTaskRunner()


@pytest.fixture(scope="session")
def noiseless_item():
    return generate_item(
        GenSpec(
            K=6,
            n=3,
            workflow_len=6,
            periods=6,
            mean_token_frames=8,
            jitter=0.0,
            noise=0.0,
            seed=3,
            id="noiseless",
        )
    )


@pytest.fixture(scope="session")
def clean_item():
    return generate_item(
        GenSpec(
            K=7,
            n=3,
            workflow_len=7,
            periods=6,
            mean_token_frames=9,
            jitter=0.05,
            noise=0.05,
            seed=11,
            id="clean",
        )
    )
