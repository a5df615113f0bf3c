"""Versioning of the on-disk document formats."""
from typing import Tuple

from .exceptions import FileFormatException, InvalidVersionFormat

# Independent of the package version
FORMAT_VERSION = "1.0.0"


def version_from_string(version: str) -> Tuple[int, int, int]:
    """
    Transforms version string in format 'x.y.z' to tuple (x,y,z) for comparisons
    :param version:
    :return:
    """
    parts = version.split(".")
    if len(parts) != 3:
        raise InvalidVersionFormat(f"Version {version!r} is not in x.y.z format")
    try:
        major, minor, patch = (int(part) for part in parts)
    except ValueError:
        raise InvalidVersionFormat(f"Version {version!r} is not in x.y.z format")
    return major, minor, patch


def check_format_version(document_version: str, kind: str) -> None:
    """
    Reject documents written with an incompatible major format version.
    Minor and patch bumps only add optional fields.

    :param document_version: version string stored in the document
    :param kind: document kind, used in the error message
    """
    try:
        major, _, _ = version_from_string(document_version)
    except InvalidVersionFormat as e:
        raise FileFormatException(
            f"Malformed {kind} format version", {"version": document_version}
        ) from e
    supported_major, _, _ = version_from_string(FORMAT_VERSION)
    if major != supported_major:
        raise FileFormatException(
            f"Unsupported {kind} format version {document_version}",
            {"supported": FORMAT_VERSION},
        )
