"""Workflow mining: buffered segmentation, alignment, trimming and slot building."""

import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import Config
from .exceptions import (
    DegenerateAlignment,
    InvalidSetting,
    PeriodFlowException,
    WindowTooLarge,
)
from .model import (
    GAP,
    Codebook,
    FeatureSequence,
    HardTranscript,
    Interval,
    PeriodSegmentation,
    Slot,
    SoftTranscript,
    TokenRun,
    TokenRunSequence,
    Workflow,
    validate_sequence,
)
from .mta import Alignment, align, column_score, consensus
from .period_estimator import WindowCandidates, estimate_windows
from .stream_tasks import detect_periods, final_state
from .tokenizer import (
    fit_codebook_from_config,
    hard_tokenize,
    rle_compress,
    soft_tokenize,
)

__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class Segment:
    """Run-level token string of one buffered window with frame anchors.

    anchors[k] is the frame range of tokens[k] clipped to span.
    """

    index: int
    nominal: Interval
    span: Interval
    tokens: Tuple[int, ...]
    anchors: Tuple[Interval, ...]


@dataclass(frozen=True)
class TrimmedAlignment(Alignment):
    """Alignment restricted to the core columns of one period.

    cores[i] is the frame range covered by row i's retained tokens, None
    when row i keeps no token. anchors[i][c] is the frame range of row i's
    token in column c, None for gaps.
    """

    columns_kept: Tuple[int, int] = (0, 0)
    cores: Tuple[Optional[Interval], ...] = ()
    anchors: Tuple[Tuple[Optional[Interval], ...], ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data["columns_kept"] = list(self.columns_kept)
        data["cores"] = [None if core is None else core.to_list() for core in self.cores]
        return data


@dataclass(frozen=True)
class MiningResult:
    workflow: Workflow
    segmentation: PeriodSegmentation
    window: int
    transcript: HardTranscript
    alignment: TrimmedAlignment
    codebook: Codebook
    periods: PeriodSegmentation
    candidates: Optional[WindowCandidates] = None

    def __post_init__(self) -> None:
        T = len(self.transcript)  # noqa: N806
        for interval in self.segmentation.boundaries:
            if interval.start < 0 or interval.end > T:
                raise InvalidSetting(
                    "Segmentation interval outside of the sequence",
                    {"interval": interval.to_list(), "T": T},
                )
        if len(self.workflow) > self.alignment.width:
            raise DegenerateAlignment("Workflow has more slots than alignment columns")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "window": self.window,
            "workflow": self.workflow.to_dict(),
            "segmentation": self.segmentation.to_dict(),
            "periods": self.periods.to_dict(),
            "alignment": self.alignment.to_dict(),
            "codebook": self.codebook.to_dict(),
            "transcript": self.transcript.to_dict(),
            "candidates": (
                None
                if self.candidates is None
                else {
                    "windows": list(self.candidates.windows),
                    "frequencies": list(self.candidates.frequencies),
                    "scores": list(self.candidates.scores),
                }
            ),
        }


def _pad(w: int, buffer: float) -> int:
    return int(math.floor(buffer * w + 0.5))


def segment_transcript(runs: TokenRunSequence, w: int, buffer: float) -> List[Segment]:
    """
    Cut the run sequence into windows of w frames, each widened by
    buffer * w frames on both sides and clipped to the sequence. A final
    partial window shorter than w / 2 is merged into its predecessor.

    :raises WindowTooLarge: fewer than 2 * w frames
    """
    if w < 2:
        raise InvalidSetting(f"Window must be at least 2 frames, got {w}")
    if not 0 <= buffer < 0.5:
        raise InvalidSetting(f"Buffer must be in [0, 0.5), got {buffer}")
    T = runs.total_length  # noqa: N806
    if T < 2 * w:
        raise WindowTooLarge(
            f"Window {w} does not fit twice into {T} frames", {"T": T, "w": w}
        )

    full, rest = divmod(T, w)
    nominals = [(i * w, (i + 1) * w) for i in range(full)]
    if rest:
        if rest >= w / 2:
            nominals.append((full * w, T))
        else:
            nominals[-1] = (nominals[-1][0], T)

    pad = _pad(w, buffer)
    segments = []
    for index, (start, end) in enumerate(nominals):
        span_start, span_end = max(0, start - pad), min(T, end + pad)
        tokens = []
        anchors = []
        for run in runs:
            if run.end <= span_start or run.start >= span_end:
                continue
            tokens.append(run.token)
            anchors.append(Interval(max(run.start, span_start), min(run.end, span_end)))
        segments.append(
            Segment(
                index,
                Interval(start, end),
                Interval(span_start, span_end),
                tuple(tokens),
                tuple(anchors),
            )
        )
    LOGGER.debug(f"Cut {len(segments)} segments of window {w} with pad {pad}")
    return segments


def _collapse(tokens: Sequence[int], first_column: int) -> Tuple[List[int], List[int]]:
    """Collapse repeated consensus tokens, remembering each group's first column."""
    collapsed: List[int] = []
    starts: List[int] = []
    for offset, token in enumerate(tokens):
        if not collapsed or collapsed[-1] != token:
            collapsed.append(token)
            starts.append(first_column + offset)
    return collapsed, starts


def _forward_end(consensus: Sequence[int], start: int, stop: int) -> int:
    collapsed, starts = _collapse(consensus[start:stop], start)
    if len(collapsed) < 3:
        return stop
    opening = collapsed[0], collapsed[1]
    for j in range(2, len(collapsed)):
        if collapsed[j] != opening[0]:
            continue
        if j + 1 == len(collapsed) or collapsed[j + 1] == opening[1]:
            return starts[j]
    return stop


def _backward_start(consensus: Sequence[int], start: int, stop: int) -> int:
    collapsed, starts = _collapse(consensus[start:stop], start)
    if len(collapsed) < 3:
        return start
    closing = collapsed[-1], collapsed[-2]
    for k in range(len(collapsed) - 3, -1, -1):
        if collapsed[k] != closing[0]:
            continue
        if k == 0 or collapsed[k - 1] == closing[1]:
            return starts[k + 1]
    return start


def _opening_column(
    row0: Sequence[int], majority: Sequence[int], left: int, right: int
) -> int:
    placed = next((c for c in range(left, right) if row0[c] != GAP), left)
    token = row0[placed]
    candidates = [c for c in range(left, right) if majority[c] == token]
    if not candidates:
        return placed
    # ties to the left
    return min(candidates, key=lambda c: (abs(c - placed), c))


def _row_anchor_map(
    al: Alignment, anchors: Sequence[Sequence[Interval]]
) -> List[List[Optional[Interval]]]:
    if len(anchors) != al.m:
        raise DegenerateAlignment("Need one anchor list per alignment row")
    mapped = []
    for row, row_anchors in zip(al.rows, anchors):
        iterator = iter(row_anchors)
        mapped.append([None if token == GAP else next(iterator) for token in row])
    return mapped


def trim_alignment(
    al: Alignment, anchors: Sequence[Sequence[Interval]]
) -> TrimmedAlignment:
    """
    Keep the columns of one period out of an alignment of buffered segments.

    Edge columns where more than half of the rows are gaps are dropped. The
    period opens with the first token of row 0, whose segment starts the
    sequence, at the consensus column holding that token nearest to where
    row 0 placed it. On the collapsed consensus from there, the first recurrence of
    the opening two-token motif ends the period; a recurrence of the closing
    motif walking back from that end bounds the left side.

    :param anchors: per row, the frame anchors of its non-gap tokens
    :raises DegenerateAlignment: nothing is left after trimming
    """
    columns = al.columns()
    mapped = _row_anchor_map(al, anchors)

    def gap_majority(column: Tuple[int, ...]) -> bool:
        return 2 * sum(1 for token in column if token == GAP) > len(column)

    left, right = 0, len(columns)
    while left < right and gap_majority(columns[left]):
        left += 1
    while right > left and gap_majority(columns[right - 1]):
        right -= 1
    if left >= right:
        raise DegenerateAlignment("Every column is gap-majority")

    majority = consensus(columns)
    opening = _opening_column(al.rows[0], majority, left, right)
    end = _forward_end(majority, opening, right)
    start = max(opening, _backward_start(majority, left, end))
    if start >= end:
        raise DegenerateAlignment(
            "Trimming leaves no column", {"start": start, "end": end}
        )

    rows = tuple(row[start:end] for row in al.rows)
    if all(token == GAP for row in rows for token in row):
        raise DegenerateAlignment("Trimmed alignment holds no token")
    kept_anchors = tuple(tuple(row[start:end]) for row in mapped)
    cores = []
    for row_anchors in kept_anchors:
        present = [anchor for anchor in row_anchors if anchor is not None]
        cores.append(
            Interval(present[0].start, present[-1].end) if present else None
        )

    LOGGER.debug(f"Trimmed alignment to columns [{start}, {end}) of {len(columns)}")
    return TrimmedAlignment(
        rows, column_score(rows), (start, end), tuple(cores), kept_anchors
    )


def build_workflow(
    al: TrimmedAlignment,
    min_slot_support: float = 0.0,
    min_branch_support: float = 0.0,
    alphabet_size: Optional[int] = None,
) -> Workflow:
    """
    One slot per column of the trimmed alignment, its alternatives being
    every token seen in the column. It is skippable when any row has a gap
    there. Durations come from the token anchors.

    Only rows that kept at least one token take part. The support filters
    are off by default: with min_slot_support above 0 a column needs a token
    in at least that share of rows to become a slot, and with
    min_branch_support above 0 an alternative needs that share (the
    majority token is always kept).

    :raises DegenerateAlignment: no column is kept
    """
    active = [i for i, core in enumerate(al.cores) if core is not None]
    if not active:
        active = list(range(al.m))
    height = len(active)
    branch_floor = max(1, math.ceil(min_branch_support * height - 1e-12))

    slots = []
    for c in range(al.width):
        present = [i for i in active if al.rows[i][c] != GAP]
        if not present or len(present) < min_slot_support * height - 1e-12:
            continue
        counts = Counter(al.rows[i][c] for i in present)
        majority = min(counts, key=lambda token: (-counts[token], token))
        alternatives = {t for t, count in counts.items() if count >= branch_floor}
        alternatives.add(majority)

        durations = []
        for i in present:
            anchor = al.anchors[i][c] if al.anchors else None
            durations.append(float(anchor.length) if anchor is not None else 1.0)
        slots.append(
            Slot(
                frozenset(alternatives),
                len(present) < height,
                max(1.0, float(np.mean(durations))),
                float(np.var(durations)),
                majority,
            )
        )

    if not slots:
        raise DegenerateAlignment("No alignment column has enough support")
    anchor_slot = next((slot for slot in slots if not slot.skippable), slots[0])
    return Workflow(tuple(slots), int(anchor_slot.majority), alphabet_size)  # type: ignore


def _segmentation_from_cores(cores: Sequence[Optional[Interval]]) -> PeriodSegmentation:
    boundaries: List[Interval] = []
    for core in sorted((c for c in cores if c is not None), key=lambda c: c.start):
        if boundaries and core.start < boundaries[-1].end:
            if core.end <= boundaries[-1].end:
                continue
            core = Interval(boundaries[-1].end, core.end)
        boundaries.append(core)
    return PeriodSegmentation(tuple(boundaries))


def mine(seq: FeatureSequence, cfg: Optional[Config] = None) -> MiningResult:
    """
    Full mining pipeline: tokenize, estimate the window, segment, align,
    trim and build the workflow.

    :raises NoPeriodicity: the sequence shows no admissible periodicity
    """
    cfg = cfg or Config()
    validate_sequence(seq)
    codebook = fit_codebook_from_config(seq, cfg)
    result = mine_transcripts(
        hard_tokenize(seq, codebook), soft_tokenize(seq, codebook), codebook, cfg
    )
    LOGGER.info(
        f"Mined {seq.id or 'sequence'}: window {result.window}, "
        f"{result.segmentation.count} segments, {result.periods.count} periods, "
        f"workflow {result.workflow.render()}"
    )
    return result


def mine_transcripts(
    hard: HardTranscript, soft: SoftTranscript, codebook: Codebook, cfg: Config
) -> MiningResult:
    """Mining pipeline from the window estimate on, for an existing codebook."""
    candidates = estimate_windows(soft, cfg, hard)
    w = candidates.head
    runs = rle_compress(hard)
    segments = segment_transcript(runs, w, cfg.buffer)
    alignment = align(
        [segment.tokens for segment in segments], cfg, cfg.free_start_gaps
    )
    trimmed = trim_alignment(alignment, [segment.anchors for segment in segments])
    workflow = build_workflow(
        trimmed, cfg.min_slot_support, cfg.min_branch_support, codebook.K
    )
    segmentation = _segmentation_from_cores(trimmed.cores)
    periods = detect_periods(hard, workflow, cfg.resync_fraction)
    return MiningResult(
        workflow, segmentation, w, hard, trimmed, codebook, periods, candidates
    )


def reference_workflow(
    seq: FeatureSequence, result: MiningResult, cfg: Optional[Config] = None
) -> Workflow:
    """
    Workflow mined again from the frames before the final period, so that a
    deviation inside that period cannot become a slot of the reference.
    Falls back to result.workflow when those frames cannot be mined.
    """
    cfg = cfg or Config()
    start = final_state(
        result.transcript, result.workflow, cfg.resync_fraction
    ).current_period_start
    if not start:
        return result.workflow
    soft = soft_tokenize(seq, result.codebook)
    try:
        prefix = mine_transcripts(
            result.transcript.slice(0, start),
            SoftTranscript(soft.rows[:start]),
            result.codebook,
            cfg,
        )
    except PeriodFlowException as e:
        LOGGER.debug(f"Keeping the full workflow, frames before {start}: {e}")
        return result.workflow
    LOGGER.debug(f"Reference workflow from frames [0, {start}): {prefix.workflow.render()}")
    return prefix.workflow


def expand_runs(tokens: Sequence[int], lengths: Sequence[int]) -> TokenRunSequence:
    """Runs from parallel token and length lists, starting at frame 0."""
    runs = []
    start = 0
    for token, length in zip(tokens, lengths):
        runs.append(TokenRun(int(token), int(length), start))
        start += int(length)
    return TokenRunSequence(tuple(runs))
