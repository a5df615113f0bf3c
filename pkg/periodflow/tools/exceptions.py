__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"

from typing import Any, Dict, Optional

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class PeriodFlowException(Exception):
    """Use this as a base exception class in custom exceptions"""

    # Override default_msg to set default message in inherited classes
    default_msg = ""
    exit_code = EXIT_DATA

    def __init__(
        self, message: Optional[str] = None, details: Optional[Dict[str, Any]] = None
    ) -> None:
        """
        Initializes the exception with optional structured details
        :param message: Title of the message
        :param details: extra context logged along with the message
        """
        if message is None:
            message = self.default_msg
        self.message = message
        super().__init__(message)
        self.details: Dict[str, Any] = details if details is not None else {}


class DimensionMismatch(PeriodFlowException):
    default_msg = "Feature dimensionality does not match"


class NonFiniteValue(PeriodFlowException):
    default_msg = "Features contain NaN or infinite values"


class EmptySequence(PeriodFlowException):
    default_msg = "Feature sequence has no frames"


class InvalidInterval(PeriodFlowException):
    default_msg = "Interval start must be smaller than its end"


class TooFewFrames(PeriodFlowException):
    default_msg = "Not enough frames to fit the codebook"


class SequenceTooShort(PeriodFlowException):
    default_msg = "Sequence is too short for spectral analysis"


class NoPeriodicity(PeriodFlowException):
    default_msg = "No admissible periodic component found"


class EmptySegment(PeriodFlowException):
    default_msg = "Cannot compare empty segments"


class DegeneratePartition(PeriodFlowException):
    default_msg = "No window candidate yields at least two segments"


class EmptyTranscript(PeriodFlowException):
    default_msg = "Cannot align an empty transcript"


class TooManySequences(PeriodFlowException):
    default_msg = "Too many transcripts for joint alignment"


class MatrixTooLarge(PeriodFlowException):
    default_msg = "Joint alignment matrix exceeds the cell limit"


class WindowTooLarge(PeriodFlowException):
    default_msg = "Window is larger than half of the sequence"


class DegenerateAlignment(PeriodFlowException):
    default_msg = "Alignment is empty after trimming"


class NoOpenPeriod(PeriodFlowException):
    default_msg = "Stream has no open period"


class LengthMismatch(PeriodFlowException):
    default_msg = "Prediction and ground truth lists differ in length"


class InvalidGroundTruth(PeriodFlowException):
    default_msg = "Ground truth period count must be at least 3"


class OutOfRange(PeriodFlowException):
    default_msg = "Value outside of [0, 1]"


class CentroidRejectionExhausted(PeriodFlowException):
    default_msg = "Could not place well-separated centroids"


class FileFormatException(PeriodFlowException):
    default_msg = "File could not be parsed"


class IdMismatch(PeriodFlowException):
    default_msg = "Prediction and ground truth ids do not match"


class InvalidSetting(PeriodFlowException):
    exit_code = EXIT_USAGE


class InvalidVersionFormat(PeriodFlowException):
    pass

