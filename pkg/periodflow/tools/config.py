"""Run configuration resolved from the settings layer and command line flags."""

import dataclasses
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple, Union

from .exceptions import InvalidSetting
from .settings import get_setting, parse_value

__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"

LOGGER = logging.getLogger(__name__)

AUTO = "auto"
WINDOW_TOKENS = ("soft", "hard")
MAX_JOINT_LIMIT = 6


@dataclass(frozen=True)
class Config:
    """
    Every tunable of the pipeline. The defaults are the standard
    configuration: soft tokens for window initialization, a 20 % buffer
    and DTW re-ranking switched on.
    """

    # tokenizer
    k: Union[int, str] = 10
    k_range: Tuple[int, int] = (6, 14)
    normalize: bool = False
    n_init: int = 4
    max_iter: int = 300
    tol: float = 1e-6
    # period estimation
    top_f: int = 3
    min_window: int = 2
    max_window: Optional[int] = None
    rerank: bool = True
    window_token: str = "soft"
    dtw_band: Optional[int] = None
    # alignment
    max_joint: int = 4
    max_cells: int = 50_000_000
    gap_penalty: int = -1
    # mining
    buffer: float = 0.2
    free_start_gaps: bool = True
    # support filters are off unless set above 0
    min_slot_support: float = 0.0
    min_branch_support: float = 0.0
    # stream tasks
    min_anomaly_frames: int = 3
    merge_gap: int = 5
    resync_fraction: float = 0.75
    # run
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        self._validate()

    def _validate(self) -> None:  # noqa: C901
        if isinstance(self.k, str):
            if self.k != AUTO:
                raise InvalidSetting(f"k must be an integer or '{AUTO}', got {self.k}")
        elif self.k < 2:
            raise InvalidSetting(f"k must be at least 2, got {self.k}")
        k_min, k_max = self.k_range
        if not 2 <= k_min <= k_max:
            raise InvalidSetting(f"Invalid k range {self.k_range}")
        if not 0 <= self.buffer < 0.5:
            raise InvalidSetting(f"buffer must be in [0, 0.5), got {self.buffer}")
        if self.top_f < 1:
            raise InvalidSetting("top_f must be positive")
        if self.min_window < 1:
            raise InvalidSetting("min_window must be positive")
        if self.max_window is not None and self.max_window <= self.min_window:
            raise InvalidSetting("max_window must be larger than min_window")
        if self.window_token not in WINDOW_TOKENS:
            raise InvalidSetting(
                f"window_token must be one of {WINDOW_TOKENS}, got {self.window_token}"
            )
        if self.dtw_band is not None and self.dtw_band < 0:
            raise InvalidSetting("dtw_band must be nonnegative")
        if not 2 <= self.max_joint <= MAX_JOINT_LIMIT:
            raise InvalidSetting(f"max_joint must be in [2, {MAX_JOINT_LIMIT}]")
        if self.max_cells < 1:
            raise InvalidSetting("max_cells must be positive")
        for name in ("min_slot_support", "min_branch_support", "resync_fraction"):
            if not 0 <= getattr(self, name) <= 1:
                raise InvalidSetting(f"{name} must be in [0, 1]")
        if self.min_anomaly_frames < 1 or self.merge_gap < 0:
            raise InvalidSetting("Invalid anomaly thresholds")
        if self.n_init < 1 or self.max_iter < 1 or self.tol < 0:
            raise InvalidSetting("Invalid K-means parameters")
        if self.workers < 1:
            raise InvalidSetting("workers must be positive")

    def replace(self, **changes: Any) -> "Config":
        """Copy with the given non-None fields replaced."""
        return dataclasses.replace(
            self, **{key: value for key, value in changes.items() if value is not None}
        )

    def to_dict(self) -> Dict[str, Any]:
        data = dataclasses.asdict(self)
        data["k_range"] = list(self.k_range)
        return data

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> "Config":
        known = {f.name for f in dataclasses.fields(Config)}
        unknown = set(data) - known
        if unknown:
            raise InvalidSetting(f"Unknown configuration keys {sorted(unknown)}")
        values = dict(data)
        if "k_range" in values:
            values["k_range"] = tuple(values["k_range"])
        return Config(**values)

    @staticmethod
    def from_settings() -> "Config":
        """Build the configuration from settings (defaults, INI, environment)."""
        return Config(
            k=_k_setting(get_setting("tokenizer/k", 10)),
            k_range=(
                get_setting("tokenizer/k_min", 6, int),
                get_setting("tokenizer/k_max", 14, int),
            ),
            normalize=get_setting("tokenizer/normalize", False, bool),
            n_init=get_setting("tokenizer/n_init", 4, int),
            max_iter=get_setting("tokenizer/max_iter", 300, int),
            tol=get_setting("tokenizer/tol", 1e-6, float),
            top_f=get_setting("period/top_f", 3, int),
            min_window=get_setting("period/min_window", 2, int),
            max_window=_optional_int(get_setting("period/max_window")),
            rerank=get_setting("period/rerank", True, bool),
            window_token=get_setting("period/window_token", "soft", str),
            dtw_band=_optional_int(get_setting("period/dtw_band")),
            max_joint=get_setting("alignment/max_joint", 4, int),
            max_cells=int(get_setting("alignment/max_cells", 50_000_000, float)),
            gap_penalty=get_setting("alignment/gap_penalty", -1, int),
            buffer=get_setting("mining/buffer", 0.2, float),
            free_start_gaps=get_setting("mining/free_start_gaps", True, bool),
            min_slot_support=get_setting("mining/min_slot_support", 0.0, float),
            min_branch_support=get_setting("mining/min_branch_support", 0.0, float),
            min_anomaly_frames=get_setting("stream/min_anomaly_frames", 3, int),
            merge_gap=get_setting("stream/merge_gap", 5, int),
            resync_fraction=get_setting("stream/resync_fraction", 0.75, float),
            seed=get_setting("run/seed", 0, int),
            workers=get_setting("run/workers", 1, int),
        )


def _k_setting(value: Any) -> Union[int, str]:
    if isinstance(value, str) and value.strip().lower() == AUTO:
        return AUTO
    try:
        return int(value)
    except (TypeError, ValueError):
        raise InvalidSetting(f"k must be an integer or '{AUTO}', got {value!r}")


def _optional_int(value: Any) -> Optional[int]:
    if value is None:
        return None
    parsed = parse_value(value) if isinstance(value, str) else value
    if parsed is None:
        return None
    try:
        return int(parsed)
    except (TypeError, ValueError):
        raise InvalidSetting(f"Expected an integer or none, got {value!r}")
