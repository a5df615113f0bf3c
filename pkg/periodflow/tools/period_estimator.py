"""Initial period window estimation.

The soft transcript is transformed with a 2-D FFT over (token, time), the
magnitude is summed over the token axis and the strongest temporal
frequencies give window candidates. Candidates are re-ranked by the DTW
distance between consecutive segments cut at that window.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from .config import Config
from .exceptions import (
    DegeneratePartition,
    DimensionMismatch,
    EmptySegment,
    InvalidSetting,
    NoPeriodicity,
    SequenceTooShort,
)
from .model import HardTranscript, SoftTranscript

__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"

LOGGER = logging.getLogger(__name__)

# Magnitudes below this fraction of the spectrum maximum count as zero
RELATIVE_ZERO = 1e-9


@dataclass(frozen=True, eq=False)
class MagnitudeSpectrum:
    mags: np.ndarray

    def __post_init__(self) -> None:
        mags = np.array(self.mags, dtype=float).reshape(-1)
        if np.any(mags < 0) or not np.all(np.isfinite(mags)):
            raise InvalidSetting("Magnitudes must be finite and nonnegative")
        mags.setflags(write=False)
        object.__setattr__(self, "mags", mags)

    @property
    def T(self) -> int:  # noqa: N802
        return int(self.mags.size)


@dataclass(frozen=True)
class WindowCandidates:
    """Ranked window sizes with the frequency each came from.

    scores holds the re-ranking score once re-ranked, else it is empty.
    """

    windows: Tuple[int, ...]
    frequencies: Tuple[int, ...] = ()
    scores: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not self.windows:
            raise NoPeriodicity("Window candidate list is empty")

    @property
    def head(self) -> int:
        return self.windows[0]


def marginal_spectrum(st: SoftTranscript) -> MagnitudeSpectrum:
    """
    Temporal-frequency marginal of the soft transcript: the magnitude of
    its 2-D DFT over (token, time), summed over the token frequency axis.

    :raises SequenceTooShort: fewer than two frames
    """
    if st.T < 2:
        raise SequenceTooShort(f"Need at least 2 frames, got {st.T}")
    spectrum = np.fft.fft2(st.rows.T)
    return MagnitudeSpectrum(np.abs(spectrum).sum(axis=0))


def hard_spectrum(ht: HardTranscript) -> MagnitudeSpectrum:
    """1-D DFT magnitude of the mean-removed hard label signal."""
    if len(ht) < 2:
        raise SequenceTooShort(f"Need at least 2 frames, got {len(ht)}")
    signal = ht.tokens.astype(float)
    return MagnitudeSpectrum(np.abs(np.fft.fft(signal - signal.mean())))


def _window_of(T: int, v: int) -> int:  # noqa: N803
    # round half up
    return int(np.floor(T / v + 0.5))


def top_windows(
    ms: MagnitudeSpectrum, min_window: int, max_window: int, top_f: int = 3
) -> WindowCandidates:
    """
    Windows implied by the strongest nonzero frequencies.

    Frequencies are visited by descending magnitude, ties toward the smaller
    frequency. Each maps to the window round(T / v); windows outside
    [min_window, max_window] and repeated windows are skipped until top_f
    windows are collected.

    :raises NoPeriodicity: no nonzero frequency with an admissible window
    """
    T = ms.T  # noqa: N806
    max_window = min(max_window, T)
    if min_window < 1 or min_window >= max_window:
        raise InvalidSetting(
            f"Window bounds [{min_window}, {max_window}] are empty", {"T": T}
        )
    floor = RELATIVE_ZERO * float(ms.mags.max()) if T else 0.0
    order = sorted(range(1, T), key=lambda v: (-ms.mags[v], v))

    windows: List[int] = []
    frequencies: List[int] = []
    for v in order:
        if len(windows) == top_f or not ms.mags[v] > floor:
            break
        w = _window_of(T, v)
        if min_window <= w <= max_window and w not in windows:
            windows.append(w)
            frequencies.append(v)

    if not windows:
        raise NoPeriodicity(
            "No admissible nonzero frequency",
            {"T": T, "min_window": min_window, "max_window": max_window},
        )
    LOGGER.debug(f"Window candidates {windows} from frequencies {frequencies}")
    return WindowCandidates(tuple(windows), tuple(frequencies))


def dtw_distance(
    a: Sequence[Sequence[float]],
    b: Sequence[Sequence[float]],
    band: Optional[int] = None,
) -> float:
    """
    Dynamic time warping distance with steps right, down and diagonal,
    both endpoints matched, summing Euclidean frame costs.

    :param band: optional Sakoe-Chiba half width, widened to the length difference
    :raises EmptySegment: either input is empty
    """
    a_array = np.asarray(a, dtype=float)
    b_array = np.asarray(b, dtype=float)
    if a_array.size == 0 or b_array.size == 0:
        raise EmptySegment()
    a_array = a_array.reshape(len(a_array), -1)
    b_array = b_array.reshape(len(b_array), -1)
    if a_array.shape[1] != b_array.shape[1]:
        raise DimensionMismatch("DTW inputs have different dimensionality")

    cost = cdist(a_array, b_array, "euclidean")
    n, m = cost.shape
    width = max(n, m) if band is None else max(band, abs(n - m))
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    # cells on the anti-diagonal i + j = s only read diagonals s - 1 and s - 2
    for s in range(2, n + m + 1):
        low = max(1, s - m, -((width - s) // 2))
        high = min(n, s - 1, (s + width) // 2)
        if low > high:
            continue
        i = np.arange(low, high + 1)
        j = s - i
        best = np.minimum(np.minimum(acc[i - 1, j], acc[i, j - 1]), acc[i - 1, j - 1])
        acc[i, j] = cost[i - 1, j - 1] + best
    return float(acc[n, m])


def _segments(rows: np.ndarray, w: int) -> List[np.ndarray]:
    T = rows.shape[0]  # noqa: N806
    full = T // w
    segments = [rows[i * w : (i + 1) * w] for i in range(full)]
    rest = T - full * w
    if rest > 0 and rest >= w / 2:
        segments.append(rows[full * w :])
    return segments


def window_score(rows: np.ndarray, w: int, band: Optional[int] = None) -> Optional[float]:
    """Mean DTW distance of consecutive segments divided by w, None when the
    window yields fewer than two segments."""
    segments = _segments(rows, w)
    if len(segments) < 2:
        return None
    distances = [
        dtw_distance(first, second, band)
        for first, second in zip(segments, segments[1:])
    ]
    return float(np.mean(distances)) / w


def rerank_windows(
    st: SoftTranscript, wc: WindowCandidates, band: Optional[int] = None
) -> WindowCandidates:
    """
    Order candidates by ascending consecutive-segment DTW score, keeping the
    spectral order on ties.

    :raises DegeneratePartition: no candidate yields two segments
    """
    return _rerank_rows(st.rows, wc, band)


def _rerank_rows(
    rows: np.ndarray, wc: WindowCandidates, band: Optional[int]
) -> WindowCandidates:
    if len(wc.windows) == 1:
        return wc

    frequencies = wc.frequencies or (0,) * len(wc.windows)
    scored = []
    for rank, (w, v) in enumerate(zip(wc.windows, frequencies)):
        score = window_score(rows, w, band)
        if score is None:
            LOGGER.debug(f"Window {w} dropped: fewer than two segments")
            continue
        scored.append((score, rank, w, v))

    if not scored:
        raise DegeneratePartition(
            "Every window candidate yields fewer than two segments",
            {"windows": list(wc.windows)},
        )
    scored.sort(key=lambda item: (item[0], item[1]))
    LOGGER.debug(
        "Re-ranked windows " + ", ".join(f"{w}:{s:.4g}" for s, _, w, _ in scored)
    )
    return WindowCandidates(
        tuple(item[2] for item in scored),
        tuple(item[3] for item in scored) if wc.frequencies else (),
        tuple(item[0] for item in scored),
    )


def window_bounds(T: int, cfg: Config) -> Tuple[int, int]:  # noqa: N803
    if T < 3 * cfg.min_window:
        raise SequenceTooShort(
            f"Need at least {3 * cfg.min_window} frames, got {T}",
            {"T": T, "min_window": cfg.min_window},
        )
    max_window = min(cfg.max_window if cfg.max_window is not None else T // 3, T)
    if max_window <= cfg.min_window:
        raise SequenceTooShort(
            f"Sequence of {T} frames leaves no room for a window above "
            f"{cfg.min_window} frames"
        )
    return cfg.min_window, max_window


def estimate_windows(
    st: SoftTranscript, cfg: Config, ht: Optional[HardTranscript] = None
) -> WindowCandidates:
    """
    Ranked window candidates. With cfg.window_token == 'hard' the spectrum
    and the re-ranking use the hard transcript (argmax of st unless given)
    instead of the soft rows.
    """
    min_window, max_window = window_bounds(st.T, cfg)
    if cfg.window_token == "hard":
        hard = ht if ht is not None else st.argmax()
        spectrum = hard_spectrum(hard)
        rows = np.eye(st.K)[hard.tokens]
    else:
        spectrum = marginal_spectrum(st)
        rows = st.rows

    candidates = top_windows(spectrum, min_window, max_window, cfg.top_f)
    if cfg.rerank:
        candidates = _rerank_rows(rows, candidates, cfg.dtw_band)
    return candidates


def estimate_period_window(
    st: SoftTranscript, cfg: Config, ht: Optional[HardTranscript] = None
) -> int:
    """
    Initial period window size: spectrum, top windows, optional re-ranking.

    :raises NoPeriodicity: no admissible periodic component
    """
    w = estimate_windows(st, cfg, ht).head
    LOGGER.debug(f"Estimated period window {w}")
    return w
