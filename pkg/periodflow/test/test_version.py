import pytest

from .. import __version__
from ..tools.exceptions import FileFormatException, InvalidVersionFormat
from ..tools.version import FORMAT_VERSION, check_format_version, version_from_string


def test_package_version_is_well_formed():
    assert version_from_string(__version__)


def test_version_from_string():
    assert version_from_string("3.16.2") == (3, 16, 2)


@pytest.mark.parametrize("value", ["3.16", "a.b.c", "1.2.3.4"])
def test_version_from_string_invalid(value):
    with pytest.raises(InvalidVersionFormat):
        version_from_string(value)


def test_check_format_version():
    check_format_version(FORMAT_VERSION, "sequence")
    check_format_version("1.9.3", "sequence")
    with pytest.raises(FileFormatException):
        check_format_version("2.0.0", "sequence")


def test_malformed_format_version():
    with pytest.raises(FileFormatException) as e:
        check_format_version("one", "workflow")

    assert e.value.details == {"version": "one"}
