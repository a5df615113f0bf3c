"""Tools to work with resource files."""

import configparser
import importlib.resources
import os
from pathlib import Path
from typing import Optional

__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"

PACKAGE_NAME: str = __name__.split(".", maxsplit=1)[0]
HOME_ENV_VAR = "PERIODFLOW_HOME"
DEFAULT_SETTINGS_FILE = "default_settings.ini"


def package_name() -> str:
    """Return the name of the top level package, used as the settings prefix."""
    return PACKAGE_NAME


def home_path(*args: str) -> Optional[Path]:
    """
    Get a path inside the user data directory, if one is configured
    with the PERIODFLOW_HOME environment variable.
    """
    home = os.environ.get(HOME_ENV_VAR)
    if not home:
        return None
    return Path(home, *args)


def package_file(package: str, file_name: str) -> Path:
    """
    Safely access a file in the package hierarchy. This will
    ensure the requested file actually exists on the file system
    outside the contextmanager, so that the file can be still
    accessed with the path on demand later.

    Use like importlib.resources, provide a package (module or string)
    and file name/path inside the package.
    """

    with importlib.resources.as_file(
        importlib.resources.files(package).joinpath(file_name)
    ) as requested_path:
        if not requested_path.is_file():
            raise FileNotFoundError(
                f"requested file {file_name} not found in {package}"
            )

    if not requested_path.is_file():
        raise FileNotFoundError(
            "requested file would be available only as a temporary resource"
        )

    return requested_path


def default_settings_config() -> configparser.ConfigParser:
    """Get the INI config parser for the packaged default settings.

    :return: The config parser object.
    :rtype: ConfigParser
    """
    path = package_file(f"{PACKAGE_NAME}.resources", DEFAULT_SETTINGS_FILE)
    config = configparser.ConfigParser()
    config.read(path)
    return config
