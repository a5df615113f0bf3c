"""Streaming period detection, completion tracking and anomaly localization.

A single pointer walks the workflow while frames arrive. Tokens of the
current slot keep the pointer, tokens of a later slot move it forward
(skipping skippable slots), anything else is a deviation. A period closes
when an opening token arrives and every slot after the pointer may be
skipped, or when a late opening token forces a resynchronization.
"""

import logging
from dataclasses import dataclass, replace
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import Config
from .exceptions import NoOpenPeriod
from .model import HardTranscript, Interval, PeriodSegmentation, Workflow

__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"

LOGGER = logging.getLogger(__name__)

TokenStream = Union[HardTranscript, Sequence[int], np.ndarray]


@dataclass(frozen=True)
class StreamState:
    """
    :param workflow_ptr: index of the slot the stream is in
    :param stream_ptr: number of frames consumed so far
    :param current_period_start: first frame of the open period, None before any
    :param completed: closed periods in order
    :param matched_slots: bitmask of the slots visited in the open period
    :param deviation_run: consecutive deviating frames up to now
    :param slot_frames: frames spent in the current slot
    """

    workflow_ptr: int
    stream_ptr: int = 0
    current_period_start: Optional[int] = None
    completed: Tuple[Interval, ...] = ()
    matched_slots: int = 0
    deviation_run: int = 0
    slot_frames: int = 0


@dataclass(frozen=True)
class CompletionEstimate:
    remaining: float
    workflow_ptr: int
    period_start: int
    elapsed: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "remaining": self.remaining,
            "workflow_ptr": self.workflow_ptr,
            "period_start": self.period_start,
            "elapsed": self.elapsed,
        }


@dataclass(frozen=True)
class AnomalyReport:
    """Localized anomaly in frames, None when nothing qualifies.

    deviant_runs lists every qualifying run after merging.
    """

    interval: Optional[Interval]
    deviant_runs: Tuple[Interval, ...] = ()
    deviant_frames: int = 0

    def seconds(self, frame_rate: float) -> Optional[Interval]:
        return None if self.interval is None else self.interval.scaled(1 / frame_rate)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "interval": None if self.interval is None else self.interval.to_list(),
            "deviant_runs": [run.to_list() for run in self.deviant_runs],
            "deviant_frames": self.deviant_frames,
        }


def initial_state(wf: Workflow) -> StreamState:
    return StreamState(workflow_ptr=len(wf) - 1)


def _rest_skippable(wf: Workflow, ptr: int) -> bool:
    return all(slot.skippable for slot in wf.slots[ptr + 1 :])


def _opening_slot(wf: Workflow, token: int) -> int:
    for index in range(wf.anchor_index + 1):
        if token in wf.slots[index].alternatives:
            return index
    return wf.anchor_index


def _open_period(state: StreamState, wf: Workflow, token: int) -> StreamState:
    t = state.stream_ptr
    completed = state.completed
    if state.current_period_start is not None:
        completed = completed + (Interval(state.current_period_start, t),)
    index = _opening_slot(wf, token)
    return StreamState(
        workflow_ptr=index,
        stream_ptr=t + 1,
        current_period_start=t,
        completed=completed,
        matched_slots=1 << index,
        deviation_run=0,
        slot_frames=1,
    )


def step(
    state: StreamState, token: int, wf: Workflow, resync_fraction: float = 0.75
) -> StreamState:
    """Consume one token and return the next state."""
    token = int(token)
    ptr = state.workflow_ptr
    current = wf.slots[ptr]
    start = state.current_period_start

    if (
        token in wf.opening_tokens
        and _rest_skippable(wf, ptr)
        and (start is None or token not in current.alternatives)
    ):
        return _open_period(state, wf, token)

    if start is None:
        return replace(
            state,
            stream_ptr=state.stream_ptr + 1,
            deviation_run=state.deviation_run + 1,
        )

    if token in current.alternatives:
        return replace(
            state,
            stream_ptr=state.stream_ptr + 1,
            slot_frames=state.slot_frames + 1,
            deviation_run=0,
        )

    for index in range(ptr + 1, len(wf)):
        slot = wf.slots[index]
        if token in slot.alternatives:
            return replace(
                state,
                workflow_ptr=index,
                stream_ptr=state.stream_ptr + 1,
                matched_slots=state.matched_slots | 1 << index,
                slot_frames=1,
                deviation_run=0,
            )
        if not slot.skippable:
            break

    elapsed = state.stream_ptr - start
    if token in wf.opening_tokens and elapsed >= resync_fraction * wf.total_duration:
        LOGGER.debug(f"Resynchronized on token {token} at frame {state.stream_ptr}")
        return _open_period(state, wf, token)

    return replace(
        state,
        stream_ptr=state.stream_ptr + 1,
        deviation_run=state.deviation_run + 1,
    )


def _tokens(stream: TokenStream) -> Iterable[int]:
    if isinstance(stream, HardTranscript):
        return stream.tokens.tolist()
    return np.asarray(stream, dtype=int).reshape(-1).tolist()


def run_stream(
    stream: TokenStream,
    wf: Workflow,
    resync_fraction: float = 0.75,
    state: Optional[StreamState] = None,
) -> Iterator[StreamState]:
    """Yield the state after each consumed token."""
    state = state or initial_state(wf)
    for token in _tokens(stream):
        state = step(state, token, wf, resync_fraction)
        yield state


def final_state(
    stream: TokenStream, wf: Workflow, resync_fraction: float = 0.75
) -> StreamState:
    state = initial_state(wf)
    for state in run_stream(stream, wf, resync_fraction, state):
        pass
    return state


def finalize(state: StreamState, wf: Workflow) -> PeriodSegmentation:
    """Closed periods plus the open one when only skippable slots are left."""
    boundaries = state.completed
    start = state.current_period_start
    if start is not None and _rest_skippable(wf, state.workflow_ptr):
        boundaries = boundaries + (Interval(start, state.stream_ptr),)
    return PeriodSegmentation(boundaries)


def detect_periods(
    stream: TokenStream, wf: Workflow, resync_fraction: float = 0.75
) -> PeriodSegmentation:
    """
    Segment a token stream into periods of the workflow.

    :param stream: hard transcript or plain token list
    :param wf: mined workflow
    :param resync_fraction: share of the workflow duration after which an
        opening token restarts the period even when slots are missing
    """
    segmentation = finalize(final_state(stream, wf, resync_fraction), wf)
    LOGGER.debug(f"Detected {segmentation.count} periods")
    return segmentation


def remaining_fraction(state: StreamState, wf: Workflow) -> float:
    durations = wf.durations
    ptr = state.workflow_ptr
    rest = float(durations[ptr + 1 :].sum())
    rest += max(0.0, float(durations[ptr]) - state.slot_frames)
    return float(np.clip(rest / wf.total_duration, 0.0, 1.0))


def track_completion(
    partial: TokenStream, wf: Workflow, resync_fraction: float = 0.75
) -> CompletionEstimate:
    """
    Remaining proportion of the period the stream ends in.

    :raises NoOpenPeriod: no period was ever opened
    """
    state = final_state(partial, wf, resync_fraction)
    if state.current_period_start is None:
        raise NoOpenPeriod()
    estimate = CompletionEstimate(
        remaining_fraction(state, wf),
        state.workflow_ptr,
        state.current_period_start,
        state.stream_ptr - state.current_period_start,
    )
    LOGGER.debug(
        f"Stream in slot {estimate.workflow_ptr} after {estimate.elapsed} frames, "
        f"remaining {estimate.remaining:.3f}"
    )
    return estimate


def _runs_of(flags: Sequence[bool]) -> List[Tuple[int, int]]:
    runs = []
    start = None
    for index, flag in enumerate(flags):
        if flag and start is None:
            start = index
        elif not flag and start is not None:
            runs.append((start, index))
            start = None
    if start is not None:
        runs.append((start, len(flags)))
    return runs


def localize_anomaly(
    period_tokens: TokenStream,
    wf: Workflow,
    cfg: Optional[Config] = None,
    offset: int = 0,
) -> AnomalyReport:
    """
    Localize the longest deviation inside one period.

    A frame deviates when the stream cannot place its token in the
    workflow. Deviating runs shorter than cfg.min_anomaly_frames are
    dropped, the rest are merged across gaps shorter than cfg.merge_gap and
    the longest merged run wins, the earliest on ties.

    :param offset: frame index of period_tokens[0] in the full stream
    """
    cfg = cfg or Config()
    flags = []
    previous = initial_state(wf)
    for state in run_stream(period_tokens, wf, cfg.resync_fraction, previous):
        flags.append(state.deviation_run > previous.deviation_run)
        previous = state

    runs = [run for run in _runs_of(flags) if run[1] - run[0] >= cfg.min_anomaly_frames]
    merged: List[Tuple[int, int]] = []
    for run in runs:
        if merged and run[0] - merged[-1][1] < cfg.merge_gap:
            merged[-1] = (merged[-1][0], run[1])
        else:
            merged.append(run)

    intervals = tuple(Interval(offset + start, offset + end) for start, end in merged)
    best = None
    for interval in intervals:
        if best is None or interval.length > best.length:
            best = interval
    return AnomalyReport(best, intervals, int(sum(flags)))


def localize_in_final_period(
    stream: TokenStream, wf: Workflow, cfg: Optional[Config] = None
) -> AnomalyReport:
    """
    Localize the anomaly of the last period of a stream.

    :raises NoOpenPeriod: no period was ever opened
    """
    cfg = cfg or Config()
    tokens = list(_tokens(stream))
    state = final_state(tokens, wf, cfg.resync_fraction)
    start = state.current_period_start
    if start is None:
        raise NoOpenPeriod()
    report = localize_anomaly(tokens[start:], wf, cfg, offset=start)
    LOGGER.debug(f"Final period starts at frame {start}, anomaly {report.interval}")
    return report
