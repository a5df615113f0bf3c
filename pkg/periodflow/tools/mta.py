"""Multiple transcript alignment.

Joint alignment of m token strings with an m-dimensional Needleman-Wunsch
style dynamic program. A column where every row contributes a token scores
the number of equal ordered token pairs minus m; any column containing
gaps scores minus the number of gaps. Only interior cells (every coordinate
at least 1) are filled; the remaining cells keep their initial values, and
the backtrace stops at the first cell without predecessors, emitting the
unconsumed prefixes as gap padded columns.

For more rows than the joint DP can afford, progressive_align builds a
center-star alignment from pairwise alignments.
"""

import logging
from collections import Counter
from dataclasses import dataclass
from functools import reduce
from operator import mul
from typing import Any, Dict, Hashable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import Config
from .exceptions import (
    DegenerateAlignment,
    EmptyTranscript,
    MatrixTooLarge,
    TooManySequences,
)
from .model import GAP, GAP_LABEL, format_token_string, parse_token_string

__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"

LOGGER = logging.getLogger(__name__)

# Predecessor sets are stored as bitsets of move masks in an uint64
MAX_BITSET_ROWS = 6

Tokens = Tuple[int, ...]
TranscriptLike = Union[str, Sequence[int]]


@dataclass(frozen=True)
class Alignment:
    rows: Tuple[Tokens, ...]
    score: float

    def __post_init__(self) -> None:
        rows = tuple(tuple(int(token) for token in row) for row in self.rows)
        if not rows:
            raise DegenerateAlignment("An alignment needs at least one row")
        width = len(rows[0])
        if any(len(row) != width for row in rows):
            raise DegenerateAlignment("Alignment rows differ in length")
        for column in zip(*rows):
            if all(token == GAP for token in column):
                raise DegenerateAlignment("Alignment contains an all-gap column")
        object.__setattr__(self, "rows", rows)

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def width(self) -> int:
        return len(self.rows[0])

    def columns(self) -> List[Tokens]:
        return [tuple(column) for column in zip(*self.rows)]

    def degapped(self, index: int) -> Tokens:
        return tuple(token for token in self.rows[index] if token != GAP)

    def render(self) -> List[str]:
        return [format_token_string(row) for row in self.rows]

    def to_dict(self) -> Dict[str, Any]:
        return {"rows": self.render(), "score": self.score}

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> "Alignment":
        return Alignment(
            tuple(tuple(parse_token_string(row)) for row in data["rows"]),
            float(data["score"]),
        )


@dataclass(frozen=True, eq=False)
class DPState:
    """Score matrix F and predecessor bitsets P of the joint DP.

    Bit b of P[pos] is set when the move with coordinate mask b (bit i of
    the mask set means coordinate i steps back) reaches the best score.
    """

    F: np.ndarray
    P: np.ndarray

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(self.F.shape)

    def predecessors(self, pos: Sequence[int]) -> List[Tuple[int, ...]]:
        """Best predecessor positions of pos, in ascending move-mask order."""
        bits = int(self.P[tuple(pos)])
        result = []
        for mask in range(1, 1 << len(pos)):
            if bits >> mask & 1:
                result.append(_step_back(pos, mask))
        return result


def _step_back(pos: Sequence[int], mask: int) -> Tuple[int, ...]:
    return tuple(c - 1 if mask >> i & 1 else c for i, c in enumerate(pos))


def _is_gap(char: Hashable) -> bool:
    return char == GAP or char == GAP_LABEL


def score_match(chars: Sequence[Hashable]) -> int:
    """
    Score of one alignment column.

    With gaps present the score is minus the gap count, otherwise the number
    of ordered index pairs (i, j), i == j included, holding equal tokens,
    minus the column height.
    """
    gaps = sum(1 for char in chars if _is_gap(char))
    if gaps:
        return -gaps
    return sum(count * count for count in Counter(chars).values()) - len(chars)


def get_neighbors(
    pos: Sequence[int], dims: Sequence[int]
) -> List[Tuple[int, ...]]:
    """
    Positions reached by stepping back a nonempty subset of the positive
    coordinates of pos, in ascending subset bitmask order.
    """
    neighbors: List[Tuple[int, ...]] = []
    for mask in range(1, 1 << len(dims)):
        neighbor = tuple(
            c - 1 if mask >> i & 1 and c > 0 else c for i, c in enumerate(pos)
        )
        if neighbor != tuple(pos) and neighbor not in neighbors:
            neighbors.append(neighbor)
    return neighbors


def _as_tokens(transcript: TranscriptLike) -> Tokens:
    if isinstance(transcript, str):
        return tuple(parse_token_string(transcript))
    return tuple(int(token) for token in transcript)


def _prepare(transcripts: Sequence[TranscriptLike]) -> List[Tokens]:
    prepared = [_as_tokens(transcript) for transcript in transcripts]
    if len(prepared) < 2:
        raise EmptyTranscript("At least two transcripts are needed for alignment")
    for index, transcript in enumerate(prepared):
        if not transcript:
            raise EmptyTranscript(f"Transcript {index} is empty")
    return prepared


def initialize_matrix(
    transcripts: Sequence[TranscriptLike], free_start: bool = False
) -> DPState:
    """
    Zero score matrix of shape (len_i + 1, ...), whose axis lines through
    the origin hold evenly spaced values from 0 down to -m * d, d being the
    extent of that axis. With free_start the axis lines stay 0, so leading
    gaps of a row that starts later cost nothing. Predecessor sets start
    empty.

    :raises EmptyTranscript: fewer than two or empty transcripts
    """
    prepared = _prepare(transcripts)
    m = len(prepared)
    dims = tuple(len(transcript) + 1 for transcript in prepared)
    F = np.zeros(dims, dtype=float)  # noqa: N806
    if free_start:
        return DPState(F, np.zeros(dims, dtype=np.uint64))
    for axis, d in enumerate(dims):
        edge = tuple(slice(None) if i == axis else 0 for i in range(m))
        F[edge] = np.linspace(0, -m * d, d)
    return DPState(F, np.zeros(dims, dtype=np.uint64))


def _match_scores(transcripts: Sequence[Tokens]) -> np.ndarray:
    """Full-column scores over the interior: twice the equal unordered pairs."""
    m = len(transcripts)
    arrays = [np.asarray(t, dtype=np.int64) for t in transcripts]
    interior = tuple(len(t) for t in transcripts)
    scores = np.zeros(interior, dtype=float)
    for i in range(m):
        for j in range(i + 1, m):
            shape_i = [1] * m
            shape_j = [1] * m
            shape_i[i] = interior[i]
            shape_j[j] = interior[j]
            equal = arrays[i].reshape(shape_i) == arrays[j].reshape(shape_j)
            scores = scores + 2.0 * equal
    return scores


def _fill(state: DPState, transcripts: Sequence[Tokens]) -> None:
    m = len(transcripts)
    dims = state.dims
    full = (1 << m) - 1
    F = state.F.reshape(-1)  # noqa: N806
    P = state.P.reshape(-1)  # noqa: N806
    strides = [int(np.prod(dims[i + 1 :])) for i in range(m)]
    offsets = [
        sum(strides[i] for i in range(m) if mask >> i & 1) for mask in range(full + 1)
    ]
    gap_scores = [-(m - bin(mask).count("1")) for mask in range(full + 1)]

    interior = tuple(d - 1 for d in dims)
    coords = np.indices(interior).reshape(m, -1) + 1
    flat = np.ravel_multi_index(tuple(coords), dims)
    matches = _match_scores(transcripts).reshape(-1)
    levels = coords.sum(axis=0)
    order = np.argsort(levels, kind="stable")
    boundaries = np.flatnonzero(np.diff(levels[order])) + 1

    for group in np.split(order, boundaries):
        cells = flat[group]
        best = np.full(cells.size, -np.inf)
        moves = np.zeros(cells.size, dtype=np.uint64)
        for mask in range(1, full + 1):
            bonus = matches[group] if mask == full else gap_scores[mask]
            candidate = F[cells - offsets[mask]] + bonus
            bit = np.uint64(1) << np.uint64(mask)
            moves = np.where(
                candidate > best,
                bit,
                np.where(candidate == best, moves | bit, moves),
            )
            best = np.maximum(best, candidate)
        F[cells] = best
        P[cells] = moves


def _lowest_mask(bits: int) -> int:
    return (bits & -bits).bit_length() - 1


def _backtrace(state: DPState, transcripts: Sequence[Tokens]) -> List[Tokens]:
    pos = tuple(d - 1 for d in state.dims)
    columns: List[Tokens] = []
    while any(pos) and int(state.P[pos]):
        mask = _lowest_mask(int(state.P[pos]))
        previous = _step_back(pos, mask)
        columns.append(
            tuple(
                transcripts[i][c - 1] if c != p else GAP
                for i, (c, p) in enumerate(zip(pos, previous))
            )
        )
        pos = previous

    # unconsumed prefixes, right aligned against the traced part
    width = max(pos)
    for offset in range(width):
        column = []
        for transcript, remaining in zip(transcripts, pos):
            index = remaining - 1 - offset
            column.append(transcript[index] if index >= 0 else GAP)
        columns.append(tuple(column))

    columns.reverse()
    return [tuple(column[i] for column in columns) for i in range(len(transcripts))]


def mta_align(
    transcripts: Sequence[TranscriptLike],
    cfg: Optional[Config] = None,
    free_start: bool = False,
) -> Alignment:
    """
    Optimal joint alignment of 2 <= m <= cfg.max_joint transcripts.
    free_start scores leading gaps on the axis lines as 0 (see
    initialize_matrix).

    Among tied predecessors the backtrace takes the one with the lowest
    move mask.

    :raises TooManySequences: m above cfg.max_joint
    :raises MatrixTooLarge: the DP would exceed cfg.max_cells cells
    :raises EmptyTranscript: fewer than two or empty transcripts
    """
    cfg = cfg or Config()
    prepared = _prepare(transcripts)
    m = len(prepared)
    if m > min(cfg.max_joint, MAX_BITSET_ROWS):
        raise TooManySequences(
            f"{m} transcripts exceed the joint limit of {cfg.max_joint}"
        )
    cells = reduce(mul, (len(t) + 1 for t in prepared), 1)
    if cells > cfg.max_cells:
        raise MatrixTooLarge(
            f"Joint alignment needs {cells} cells", {"max_cells": cfg.max_cells}
        )

    state = initialize_matrix(prepared, free_start)
    _fill(state, prepared)
    rows = _backtrace(state, prepared)
    score = float(state.F[tuple(d - 1 for d in state.dims)])
    return Alignment(tuple(rows), score)


def pairwise_nw(
    a: TranscriptLike, b: TranscriptLike, free_start: bool = False
) -> Alignment:
    """Two-row special case of mta_align."""
    return mta_align([a, b], free_start=free_start)


def column_score(rows: Sequence[Tokens]) -> float:
    return float(sum(score_match(column) for column in zip(*rows)))


def consensus(columns: Sequence[Sequence[int]]) -> Tokens:
    """Majority token per column, ties toward the smallest token."""
    majority = []
    for column in columns:
        counts = Counter(token for token in column if token != GAP)
        majority.append(min(counts, key=lambda token: (-counts[token], token)))
    return tuple(majority)


def progressive_align(
    transcripts: Sequence[TranscriptLike],
    cfg: Optional[Config] = None,
    free_start: bool = False,
) -> Alignment:
    """
    Center-star alignment for any number of transcripts.

    The center maximizes the summed pairwise alignment score (ties to the
    lowest index). Every other transcript, in input order, is aligned to the
    majority consensus of the profile built so far; a gap opened in the
    consensus becomes a gap column for all rows already in the profile.
    The score is the column-wise sum of score_match.
    """
    prepared = [_as_tokens(transcript) for transcript in transcripts]
    if not prepared or any(not transcript for transcript in prepared):
        raise EmptyTranscript("Cannot align an empty transcript")
    m = len(prepared)
    if m == 1:
        return Alignment((prepared[0],), column_score([prepared[0]]))

    totals = [0.0] * m
    for i in range(m):
        for j in range(i + 1, m):
            pair_score = pairwise_nw(prepared[i], prepared[j], free_start).score
            totals[i] += pair_score
            totals[j] += pair_score
    center = max(range(m), key=lambda index: (totals[index], -index))

    members = [center]
    columns: List[List[int]] = [[token] for token in prepared[center]]
    for index in range(m):
        if index == center:
            continue
        pair = pairwise_nw(consensus(columns), prepared[index], free_start)
        merged: List[List[int]] = []
        profile_iter = iter(columns)
        for consensus_token, token in zip(*pair.rows):
            if consensus_token == GAP:
                merged.append([GAP] * len(members) + [token])
            else:
                merged.append(next(profile_iter) + [token])
        columns = merged
        members.append(index)

    by_member = {member: position for position, member in enumerate(members)}
    rows = tuple(
        tuple(column[by_member[index]] for column in columns) for index in range(m)
    )
    LOGGER.debug(f"Progressive alignment of {m} transcripts around {center}")
    return Alignment(rows, column_score(rows))


def align(
    transcripts: Sequence[TranscriptLike],
    cfg: Optional[Config] = None,
    free_start: bool = False,
) -> Alignment:
    """Joint alignment when affordable, progressive otherwise."""
    cfg = cfg or Config()
    prepared = [_as_tokens(transcript) for transcript in transcripts]
    if len(prepared) == 1:
        return progressive_align(prepared, cfg, free_start)
    cells = reduce(mul, (len(t) + 1 for t in prepared), 1)
    if len(prepared) <= min(cfg.max_joint, MAX_BITSET_ROWS) and cells <= cfg.max_cells:
        LOGGER.debug(f"Joint alignment of {len(prepared)} transcripts, {cells} cells")
        return mta_align(prepared, cfg, free_start)
    return progressive_align(prepared, cfg, free_start)
