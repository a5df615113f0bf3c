"""Domain types shared by the mining pipeline, the stream tasks and the metrics.

All types are immutable after construction. Arrays held by them are copied
and flagged read-only, so instances can be shared between worker threads.
Time is expressed in frame indices everywhere; frame_rate is only applied
when reporting.
"""

import logging
import re
from dataclasses import dataclass, field
from typing import (
    Any,
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np

from .exceptions import (
    DimensionMismatch,
    EmptySequence,
    FileFormatException,
    InvalidInterval,
    NonFiniteValue,
    OutOfRange,
)

__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"

LOGGER = logging.getLogger(__name__)

GAP = -1
GAP_LABEL = "-"
SKIP_MARK = "_"

Number = Union[int, float]

_LABEL_PATTERN = re.compile(r"-|[A-Z][0-9]*")


def token_label(token: int) -> str:
    """
    Display label of a token: 0 -> 'A', 25 -> 'Z', 26 -> 'A1', 27 -> 'B1'.
    The gap is rendered as '-'.
    """
    if token == GAP:
        return GAP_LABEL
    if token < 0:
        raise OutOfRange(f"Token {token} is negative")
    letter = chr(ord("A") + token % 26)
    suffix = token // 26
    return letter if suffix == 0 else f"{letter}{suffix}"


def parse_token_label(label: str) -> int:
    if label == GAP_LABEL:
        return GAP
    if not _LABEL_PATTERN.fullmatch(label):
        raise FileFormatException(f"Invalid token label {label!r}")
    suffix = int(label[1:]) if len(label) > 1 else 0
    return (ord(label[0]) - ord("A")) + 26 * suffix


def parse_token_string(text: str) -> List[int]:
    """Parse a compact display string such as 'AB-C' or 'A1B' into tokens."""
    compact = "".join(text.split())
    labels = _LABEL_PATTERN.findall(compact)
    if "".join(labels) != compact:
        raise FileFormatException(f"Invalid token string {text!r}")
    return [parse_token_label(label) for label in labels]


def format_token_string(tokens: Iterable[int]) -> str:
    return "".join(token_label(int(token)) for token in tokens)


def _readonly(values: Any, dtype: Any) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


def _json_number(value: Number) -> Number:
    as_float = float(value)
    return int(as_float) if as_float.is_integer() else as_float


def _coerce_frames(frames: Any) -> np.ndarray:
    if isinstance(frames, np.ndarray):
        array = frames
    else:
        rows = list(frames)
        if not rows:
            raise EmptySequence()
        dims = {len(row) for row in rows}
        if len(dims) > 1:
            raise DimensionMismatch(
                "Frames have differing dimensionality", {"dimensions": sorted(dims)}
            )
        array = np.asarray(rows, dtype=float)
    if array.ndim != 2:
        raise DimensionMismatch(f"Frames must form a 2-D array, got {array.ndim}-D")
    if array.shape[0] == 0:
        raise EmptySequence()
    if array.shape[1] == 0:
        raise DimensionMismatch("Frames must have at least one component")
    if not np.all(np.isfinite(array)):
        bad = np.argwhere(~np.isfinite(array))[0]
        raise NonFiniteValue(
            "Features contain NaN or infinite values",
            {"frame": int(bad[0]), "component": int(bad[1])},
        )
    return array


@dataclass(frozen=True, eq=False)
class FeatureSequence:
    frames: np.ndarray
    frame_rate: float = 1.0
    id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "frames", _readonly(_coerce_frames(self.frames), float))
        if not np.isfinite(self.frame_rate) or self.frame_rate <= 0:
            raise OutOfRange(f"Frame rate must be positive, got {self.frame_rate}")
        object.__setattr__(self, "frame_rate", float(self.frame_rate))

    @property
    def T(self) -> int:  # noqa: N802
        return int(self.frames.shape[0])

    @property
    def n(self) -> int:
        return int(self.frames.shape[1])

    def __len__(self) -> int:
        return self.T

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "frame_rate": self.frame_rate,
            "frames": self.frames.tolist(),
        }

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> "FeatureSequence":
        return FeatureSequence(
            data["frames"], float(data.get("frame_rate", 1.0)), str(data.get("id", ""))
        )


def validate_sequence(seq: FeatureSequence) -> FeatureSequence:
    """
    Check the sequence invariants and return the sequence unchanged.

    :raises DimensionMismatch: ragged or non 2-D frames
    :raises NonFiniteValue: NaN or infinite components
    :raises EmptySequence: no frames
    """
    _coerce_frames(seq.frames)
    return seq


@dataclass(frozen=True, eq=False)
class Codebook:
    """K centroids over feature space, optionally with the z-normalization
    that was applied to the features before fitting."""

    centroids: np.ndarray
    shift: Optional[np.ndarray] = None
    scale: Optional[np.ndarray] = None
    inertia: float = 0.0

    def __post_init__(self) -> None:
        centroids = np.asarray(self.centroids, dtype=float)
        if centroids.ndim != 2 or centroids.shape[0] < 2:
            raise DimensionMismatch("A codebook needs at least two centroids")
        if not np.all(np.isfinite(centroids)):
            raise NonFiniteValue("Centroids contain NaN or infinite values")
        object.__setattr__(self, "centroids", _readonly(centroids, float))
        for name in ("shift", "scale"):
            value = getattr(self, name)
            if value is not None:
                value = np.asarray(value, dtype=float)
                if value.shape != (centroids.shape[1],):
                    raise DimensionMismatch(f"Codebook {name} has the wrong shape")
                object.__setattr__(self, name, _readonly(value, float))

    @property
    def K(self) -> int:  # noqa: N802
        return int(self.centroids.shape[0])

    @property
    def n(self) -> int:
        return int(self.centroids.shape[1])

    def transform(self, frames: np.ndarray) -> np.ndarray:
        """Map raw frames into the space the centroids live in."""
        if frames.shape[1] != self.n:
            raise DimensionMismatch(
                "Frame dimensionality does not match the codebook",
                {"frames": int(frames.shape[1]), "codebook": self.n},
            )
        if self.shift is None or self.scale is None:
            return frames
        return (frames - self.shift) / self.scale

    def to_dict(self) -> Dict[str, Any]:
        return {
            "centroids": self.centroids.tolist(),
            "shift": None if self.shift is None else self.shift.tolist(),
            "scale": None if self.scale is None else self.scale.tolist(),
            "inertia": self.inertia,
        }

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> "Codebook":
        return Codebook(
            data["centroids"],
            data.get("shift"),
            data.get("scale"),
            float(data.get("inertia", 0.0)),
        )


@dataclass(frozen=True, eq=False)
class HardTranscript:
    tokens: np.ndarray
    K: Optional[int] = None

    def __post_init__(self) -> None:
        tokens = np.asarray(self.tokens, dtype=np.int64).reshape(-1)
        if tokens.size and tokens.min() < 0:
            raise OutOfRange("Tokens must be nonnegative")
        if self.K is not None and tokens.size and tokens.max() >= self.K:
            raise OutOfRange(
                "Token outside of the codebook alphabet",
                {"token": int(tokens.max()), "K": self.K},
            )
        object.__setattr__(self, "tokens", _readonly(tokens, np.int64))

    def __len__(self) -> int:
        return int(self.tokens.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HardTranscript):
            return NotImplemented
        return self.K == other.K and np.array_equal(self.tokens, other.tokens)

    def __hash__(self) -> int:
        return hash((self.K, self.tokens.tobytes()))

    def slice(self, start: int, end: int) -> "HardTranscript":
        return HardTranscript(self.tokens[start:end], self.K)

    def to_dict(self) -> Dict[str, Any]:
        return {"K": self.K, "tokens": self.tokens.tolist()}

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> "HardTranscript":
        return HardTranscript(data["tokens"], data.get("K"))


@dataclass(frozen=True, eq=False)
class SoftTranscript:
    rows: np.ndarray

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] == 0:
            raise EmptySequence("Soft transcript needs a nonempty 2-D row matrix")
        if not np.all(np.isfinite(rows)) or np.any(rows < 0):
            raise NonFiniteValue("Soft transcript rows must be finite and nonnegative")
        if np.any(np.abs(rows.sum(axis=1) - 1.0) > 1e-9):
            raise OutOfRange("Soft transcript rows must sum to 1")
        object.__setattr__(self, "rows", _readonly(rows, float))

    @property
    def T(self) -> int:  # noqa: N802
        return int(self.rows.shape[0])

    @property
    def K(self) -> int:  # noqa: N802
        return int(self.rows.shape[1])

    def argmax(self) -> HardTranscript:
        """Most probable token per frame; np.argmax keeps the lowest index on ties."""
        return HardTranscript(np.argmax(self.rows, axis=1), self.K)

    def to_dict(self) -> Dict[str, Any]:
        return {"rows": self.rows.tolist()}

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> "SoftTranscript":
        return SoftTranscript(data["rows"])


@dataclass(frozen=True)
class TokenRun:
    token: int
    length: int
    start: int = 0

    @property
    def end(self) -> int:
        return self.start + self.length


@dataclass(frozen=True)
class TokenRunSequence:
    runs: Tuple[TokenRun, ...] = ()

    def __post_init__(self) -> None:
        runs = tuple(self.runs)
        position = runs[0].start if runs else 0
        for previous, run in zip((None, *runs), runs):
            if run.length < 1:
                raise OutOfRange("Run lengths must be positive")
            if run.start != position:
                raise OutOfRange("Runs must be contiguous")
            if previous is not None and previous.token == run.token:
                raise OutOfRange("Adjacent runs must carry distinct tokens")
            position = run.end
        object.__setattr__(self, "runs", runs)

    def __len__(self) -> int:
        return len(self.runs)

    def __iter__(self) -> Iterator[TokenRun]:
        return iter(self.runs)

    @property
    def total_length(self) -> int:
        return sum(run.length for run in self.runs)

    def tokens(self) -> List[int]:
        return [run.token for run in self.runs]

    def expand(self, K: Optional[int] = None) -> HardTranscript:  # noqa: N803
        return HardTranscript(
            np.repeat(
                np.array(self.tokens(), dtype=np.int64),
                [run.length for run in self.runs],
            ),
            K,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {"runs": [[run.token, run.length, run.start] for run in self.runs]}

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> "TokenRunSequence":
        return TokenRunSequence(tuple(TokenRun(*map(int, run)) for run in data["runs"]))


@dataclass(frozen=True)
class Interval:
    """Half-open time interval [start, end)."""

    start: Number
    end: Number

    def __post_init__(self) -> None:
        if not (np.isfinite(self.start) and np.isfinite(self.end)):
            raise InvalidInterval(f"Interval bounds must be finite: {self}")
        if not self.start < self.end:
            raise InvalidInterval(
                f"Interval start {self.start} is not smaller than end {self.end}"
            )

    @property
    def length(self) -> Number:
        return self.end - self.start

    def contains(self, other: "Interval") -> bool:
        return self.start <= other.start and other.end <= self.end

    def scaled(self, factor: float) -> "Interval":
        return Interval(self.start * factor, self.end * factor)

    def to_list(self) -> List[Number]:
        return [_json_number(self.start), _json_number(self.end)]

    @staticmethod
    def from_list(values: Sequence[Number]) -> "Interval":
        if len(values) != 2:
            raise FileFormatException(f"An interval needs two bounds, got {values}")
        return Interval(_json_number(values[0]), _json_number(values[1]))


@dataclass(frozen=True)
class Slot:
    alternatives: FrozenSet[int]
    skippable: bool
    mean_duration: float
    duration_var: float = 0.0
    majority: Optional[int] = None

    def __post_init__(self) -> None:
        alternatives = frozenset(int(token) for token in self.alternatives)
        if not alternatives:
            raise OutOfRange("A slot needs at least one alternative")
        if min(alternatives) < 0:
            raise OutOfRange("Slot alternatives must be nonnegative tokens")
        if not self.mean_duration > 0:
            raise OutOfRange("Slot mean duration must be positive")
        majority = min(alternatives) if self.majority is None else int(self.majority)
        if majority not in alternatives:
            raise OutOfRange("Slot majority token must be one of its alternatives")
        object.__setattr__(self, "alternatives", alternatives)
        object.__setattr__(self, "majority", majority)
        object.__setattr__(self, "mean_duration", float(self.mean_duration))
        object.__setattr__(self, "duration_var", float(self.duration_var))

    def render(self) -> str:
        if len(self.alternatives) == 1:
            body = token_label(self.majority)  # type: ignore
        else:
            ordered = sorted(self.alternatives, key=lambda t: (t != self.majority, t))
            body = "[" + "|".join(token_label(token) for token in ordered) + "]"
        return (SKIP_MARK if self.skippable else "") + body

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alternatives": sorted(self.alternatives),
            "skippable": self.skippable,
            "mean_duration": self.mean_duration,
            "duration_var": self.duration_var,
            "majority": self.majority,
        }

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> "Slot":
        return Slot(
            frozenset(data["alternatives"]),
            bool(data["skippable"]),
            float(data["mean_duration"]),
            float(data.get("duration_var", 0.0)),
            data.get("majority"),
        )


@dataclass(frozen=True)
class Workflow:
    """Ordered multi-branch slot sequence mined from aligned periods."""

    slots: Tuple[Slot, ...]
    start_symbol: int
    alphabet_size: Optional[int] = None

    def __post_init__(self) -> None:
        slots = tuple(self.slots)
        if not slots:
            raise OutOfRange("A workflow needs at least one slot")
        object.__setattr__(self, "slots", slots)
        if self.alphabet_size is not None:
            largest = max(max(slot.alternatives) for slot in slots)
            if largest >= self.alphabet_size:
                raise OutOfRange(
                    "Workflow token outside of the alphabet",
                    {"token": largest, "K": self.alphabet_size},
                )
        expected = self.anchor_slot().majority
        if self.start_symbol != expected:
            raise OutOfRange(
                "Start symbol must be the majority token of the first "
                "non-skippable slot",
                {"start_symbol": self.start_symbol, "expected": expected},
            )

    def anchor_slot(self) -> Slot:
        """First non-skippable slot, or the first slot if every slot is skippable."""
        return self.slots[self.anchor_index]

    @property
    def anchor_index(self) -> int:
        for index, slot in enumerate(self.slots):
            if not slot.skippable:
                return index
        return 0

    def __len__(self) -> int:
        return len(self.slots)

    @property
    def durations(self) -> np.ndarray:
        return np.array([slot.mean_duration for slot in self.slots], dtype=float)

    @property
    def total_duration(self) -> float:
        return float(self.durations.sum())

    @property
    def opening_tokens(self) -> FrozenSet[int]:
        """Tokens that may open a period: alternatives up to the anchor slot."""
        tokens: FrozenSet[int] = frozenset()
        for slot in self.slots[: self.anchor_index + 1]:
            tokens = tokens | slot.alternatives
        return tokens

    def tokens(self) -> FrozenSet[int]:
        tokens: FrozenSet[int] = frozenset()
        for slot in self.slots:
            tokens = tokens | slot.alternatives
        return tokens

    def render(self) -> str:
        """Display form, e.g. 'A [B|D] _C' where '_' marks a skippable slot."""
        return " ".join(slot.render() for slot in self.slots)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "display": self.render(),
            "start_symbol": self.start_symbol,
            "alphabet_size": self.alphabet_size,
            "slots": [slot.to_dict() for slot in self.slots],
        }

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> "Workflow":
        return Workflow(
            tuple(Slot.from_dict(slot) for slot in data["slots"]),
            int(data["start_symbol"]),
            data.get("alphabet_size"),
        )

    @staticmethod
    def from_tokens(
        tokens: Sequence[int], durations: Optional[Sequence[float]] = None
    ) -> "Workflow":
        """Linear single-branch workflow, convenient for tests and fixtures."""
        if durations is None:
            durations = [1.0] * len(tokens)
        slots = tuple(
            Slot(frozenset({token}), False, duration)
            for token, duration in zip(tokens, durations)
        )
        return Workflow(slots, int(tokens[0]))


def parse_workflow(
    text: str, durations: Optional[Sequence[float]] = None
) -> Workflow:
    """
    Parse the display form back into a workflow. Durations default to 1 frame.
    The first label inside brackets is the majority token.
    """
    slots = []
    for index, item in enumerate(text.split()):
        skippable = item.startswith(SKIP_MARK)
        body = item[1:] if skippable else item
        if body.startswith("[") and body.endswith("]"):
            labels = body[1:-1].split("|")
        else:
            labels = [body]
        tokens = [parse_token_label(label) for label in labels]
        duration = 1.0 if durations is None else float(durations[index])
        slots.append(Slot(frozenset(tokens), skippable, duration, majority=tokens[0]))
    if not slots:
        raise FileFormatException("Empty workflow string")
    workflow_slots = tuple(slots)
    anchor = next((slot for slot in workflow_slots if not slot.skippable), slots[0])
    return Workflow(workflow_slots, int(anchor.majority))  # type: ignore


@dataclass(frozen=True)
class PeriodSegmentation:
    boundaries: Tuple[Interval, ...] = ()

    def __post_init__(self) -> None:
        boundaries = tuple(self.boundaries)
        for previous, current in zip(boundaries, boundaries[1:]):
            if current.start < previous.end:
                raise InvalidInterval(
                    "Period boundaries must be sorted and non-overlapping",
                    {"previous": previous.to_list(), "current": current.to_list()},
                )
        object.__setattr__(self, "boundaries", boundaries)

    @property
    def count(self) -> int:
        return len(self.boundaries)

    def __len__(self) -> int:
        return self.count

    def to_dict(self) -> Dict[str, Any]:
        return {
            "count": self.count,
            "boundaries": [interval.to_list() for interval in self.boundaries],
        }

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> "PeriodSegmentation":
        segmentation = PeriodSegmentation(
            tuple(Interval.from_list(values) for values in data["boundaries"])
        )
        if "count" in data and int(data["count"]) != segmentation.count:
            raise FileFormatException(
                "Period count does not match the number of boundaries"
            )
        return segmentation


TASKS = ("period", "completion", "anomaly")


@dataclass(frozen=True)
class GroundTruth:
    boundaries: Tuple[Interval, ...]
    workflow_tokens: str
    anomaly: Optional[Interval] = None
    remaining_proportion: Optional[float] = None
    length: Optional[int] = None
    task: str = "period"
    alphabet_size: Optional[int] = None
    id: str = ""
    extra: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        boundaries = tuple(self.boundaries)
        object.__setattr__(self, "boundaries", boundaries)
        if self.task not in TASKS:
            raise FileFormatException(f"Unknown task {self.task!r}")
        segmentation = PeriodSegmentation(boundaries)
        if self.length is not None and boundaries:
            contiguous = all(
                previous.end == current.start
                for previous, current in zip(boundaries, boundaries[1:])
            )
            if (
                boundaries[0].start != 0
                or boundaries[-1].end != self.length
                or not contiguous
            ):
                raise InvalidInterval(
                    "Ground truth boundaries must partition the sequence",
                    {"length": self.length, **segmentation.to_dict()},
                )
        if self.remaining_proportion is not None and not (
            0.0 <= self.remaining_proportion <= 1.0
        ):
            raise OutOfRange(
                f"Remaining proportion {self.remaining_proportion} outside [0, 1]"
            )

    @property
    def segmentation(self) -> PeriodSegmentation:
        return PeriodSegmentation(self.boundaries)

    @property
    def count(self) -> int:
        return len(self.boundaries)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "task": self.task,
            "length": self.length,
            "alphabet_size": self.alphabet_size,
            "workflow": self.workflow_tokens,
            "boundaries": [interval.to_list() for interval in self.boundaries],
            "anomaly": None if self.anomaly is None else self.anomaly.to_list(),
            "remaining": self.remaining_proportion,
            **({"extra": self.extra} if self.extra else {}),
        }

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> "GroundTruth":
        try:
            return GroundTruth(
                boundaries=tuple(Interval.from_list(b) for b in data["boundaries"]),
                workflow_tokens=str(data.get("workflow", "")),
                anomaly=(
                    None
                    if data.get("anomaly") is None
                    else Interval.from_list(data["anomaly"])
                ),
                remaining_proportion=(
                    None if data.get("remaining") is None else float(data["remaining"])
                ),
                length=None if data.get("length") is None else int(data["length"]),
                task=str(data.get("task", "period")),
                alphabet_size=data.get("alphabet_size"),
                id=str(data.get("id", "")),
                extra=dict(data.get("extra", {})),
            )
        except KeyError as e:
            raise FileFormatException(f"Ground truth is missing field {e}")
