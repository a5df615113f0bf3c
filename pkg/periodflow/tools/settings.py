"""Layered settings: in-process overrides, environment, user INI, packaged defaults."""

import configparser
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from .exceptions import InvalidSetting
from .resources import default_settings_config, package_name

__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"

LOGGER = logging.getLogger(__name__)

GENERAL_SECTION = "general"

_OVERRIDES: Dict[str, str] = {}
_USER_CONFIG: Optional[configparser.ConfigParser] = None
_DEFAULT_CONFIG: Optional[configparser.ConfigParser] = None


def setting_key(*args: str) -> str:
    """
    Get setting key

    :param args List of path elements e.g. ['mining', 'buffer']
    """
    return "/" + "/".join((package_name(), *map(str, args)))


def _split_key(full_key: str) -> Tuple[str, str]:
    prefix = setting_key()
    relative = full_key[len(prefix) :] if full_key.startswith(prefix) else full_key
    parts = [part for part in relative.split("/") if part]
    if not parts:
        raise InvalidSetting(f"Setting key {full_key} has no option")
    if len(parts) == 1:
        return GENERAL_SECTION, parts[0]
    return "/".join(parts[:-1]), parts[-1]


def _env_var_name(section: str, option: str) -> str:
    return "_".join((package_name(), section, option)).replace("/", "_").upper()


def _defaults() -> configparser.ConfigParser:
    global _DEFAULT_CONFIG
    if _DEFAULT_CONFIG is None:
        _DEFAULT_CONFIG = default_settings_config()
    return _DEFAULT_CONFIG


def load_user_settings(path: Union[str, Path]) -> None:
    """
    Read an INI file whose values take precedence over the packaged defaults.

    :param path: path to the INI file
    """
    global _USER_CONFIG
    config = configparser.ConfigParser()
    try:
        read = config.read(path)
    except configparser.Error as e:
        raise InvalidSetting(f"Could not parse settings file {path}: {e}")
    if not read:
        raise InvalidSetting(f"Settings file {path} could not be read")
    LOGGER.debug(f"Loaded user settings from {path}")
    _USER_CONFIG = config


def reset_settings() -> None:
    """Forget overrides and the user INI file."""
    global _USER_CONFIG
    _OVERRIDES.clear()
    _USER_CONFIG = None


def _raw_value(full_key: str) -> Optional[str]:
    if full_key in _OVERRIDES:
        return _OVERRIDES[full_key]
    section, option = _split_key(full_key)
    env_value = os.environ.get(_env_var_name(section, option))
    if env_value is not None:
        return env_value
    for config in (_USER_CONFIG, _defaults()):
        if config is not None and config.has_option(section, option):
            return config.get(section, option)
    return None


def get_setting(
    key: str,
    default: Optional[Any] = None,
    typehint: Optional[type] = None,
    internal: bool = True,
) -> Any:
    """
    Get setting value

    :param key: Key for the setting
    :param default: Optional default value
    :param typehint: Type hint
    :param internal: Whether the key is relative to the package prefix
    """
    raw = _raw_value(setting_key(key) if internal else key)
    value: Any = default if raw is None else raw
    if typehint is None or value is None:
        return value
    try:
        if typehint is bool:
            parsed = parse_value(value) if isinstance(value, str) else value
            return bool(parsed)
        return typehint(value)
    except (TypeError, ValueError) as e:
        raise InvalidSetting(f"Setting {key}={value!r} is not a valid {typehint}: {e}")


def set_setting(
    key: str,
    value: Union[str, int, float, bool],
    internal: bool = True,
) -> bool:
    """
    Set a value for the lifetime of the process

    :param key: Key for the setting
    :param value: Value for the setting
    :param internal: Whether the key is relative to the package prefix
    """
    full_key = setting_key(key) if internal else key
    _split_key(full_key)
    if isinstance(value, bool):
        value = "true" if value else "false"
    _OVERRIDES[full_key] = str(value)
    return True


def parse_value(value: Any) -> Union[None, str, bool]:
    """
    Parse a raw INI value

    :param value: raw value
    """
    str_value = str(value)
    val: Union[None, str, bool] = str_value
    if val.lower() in ("null", "none", ""):
        val = None
    elif val.lower() == "false":
        val = False
    elif val.lower() == "true":
        val = True
    return val
