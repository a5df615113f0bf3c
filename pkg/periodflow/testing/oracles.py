"""Slow reference implementations used to check the fast code paths."""

import cmath
import math
from itertools import permutations, product
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..tools.model import GAP

__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"


def dft_marginal(rows: Sequence[Sequence[float]]) -> List[float]:
    """Direct double-sum 2-D DFT over (token, time), magnitudes summed over tokens."""
    T = len(rows)  # noqa: N806
    K = len(rows[0])  # noqa: N806
    marginal = []
    for v in range(T):
        total = 0.0
        for u in range(K):
            value = 0j
            for t in range(T):
                for k in range(K):
                    angle = -2 * math.pi * (u * k / K + v * t / T)
                    value += rows[t][k] * cmath.exp(1j * angle)
            total += abs(value)
        marginal.append(total)
    return marginal


def dtw_paths(
    a: Sequence[Sequence[float]],
    b: Sequence[Sequence[float]],
    width: Optional[int] = None,
) -> float:
    """
    Minimum cost over every monotone warping path, enumerated one by one.
    With width, paths may only visit frame pairs with |i - j| <= width.
    """
    n, m = len(a), len(b)
    cost = [[math.dist(a[i], b[j]) for j in range(m)] for i in range(n)]
    best = math.inf

    def walk(i: int, j: int, acc: float) -> None:
        nonlocal best
        if width is not None and abs(i - j) > width:
            return
        acc += cost[i][j]
        if i == n - 1 and j == m - 1:
            best = min(best, acc)
            return
        if i + 1 < n:
            walk(i + 1, j, acc)
        if j + 1 < m:
            walk(i, j + 1, acc)
        if i + 1 < n and j + 1 < m:
            walk(i + 1, j + 1, acc)

    walk(0, 0, 0.0)
    return best


def assignment_by_permutation(matrix: Sequence[Sequence[float]]) -> float:
    """Largest total of a one-to-one assignment covering min(rows, columns) pairs."""
    array = np.asarray(matrix, dtype=float)
    if array.shape[0] > array.shape[1]:
        array = array.T
    rows, columns = array.shape
    return max(
        sum(array[i, chosen[i]] for i in range(rows))
        for chosen in permutations(range(columns), rows)
    )


def nearest_centroid(
    frames: Sequence[Sequence[float]], centroids: Sequence[Sequence[float]]
) -> List[int]:
    labels = []
    for frame in frames:
        best, best_distance = 0, math.inf
        for index, centroid in enumerate(centroids):
            distance = math.dist(frame, centroid)
            if distance < best_distance:
                best, best_distance = index, distance
        labels.append(best)
    return labels


def softmax_row(
    frame: Sequence[float], centroids: Sequence[Sequence[float]]
) -> List[float]:
    distances = [math.dist(frame, centroid) for centroid in centroids]
    shift = min(distances)
    weights = [math.exp(shift - distance) for distance in distances]
    total = sum(weights)
    return [weight / total for weight in weights]


def _start_score(face: Sequence[int], lengths: Sequence[int], free_start: bool) -> float:
    """Score of the face point a path leaves from into the interior."""
    nonzero = [axis for axis, c in enumerate(face) if c]
    if free_start or len(nonzero) != 1:
        return 0.0
    axis = nonzero[0]
    d = lengths[axis] + 1
    return float(np.linspace(0, -len(face) * d, d)[face[axis]])


def _column_value(column: Sequence[int]) -> float:
    """Twice the equal unordered pairs of a full column, else minus the gaps."""
    gaps = sum(1 for token in column if token == GAP)
    if gaps:
        return -float(gaps)
    return 2.0 * sum(
        1
        for i in range(len(column))
        for j in range(i + 1, len(column))
        if column[i] == column[j]
    )


def enumerated_alignment_score(
    transcripts: Sequence[Sequence[int]], free_start: bool = False
) -> float:
    """
    Best joint alignment score over every path, enumerated one by one.

    A path leaves a face point (some coordinate 0) into the interior and
    then collects the value of every column it emits. The face point adds
    its start score: points on an axis line score evenly from 0 down to
    -m * d, d being the extent of that axis, every other face point scores
    0, and with free_start every face point scores 0.
    """
    m = len(transcripts)
    lengths = [len(t) for t in transcripts]
    end = tuple(lengths)
    best = -math.inf

    def moved(pos: Tuple[int, ...], mask: int) -> Optional[Tuple[int, ...]]:
        nxt = tuple(c + (mask >> i & 1) for i, c in enumerate(pos))
        if any(c > n for c, n in zip(nxt, lengths)):
            return None
        return nxt

    def column(nxt: Tuple[int, ...], mask: int) -> List[int]:
        return [
            transcripts[i][nxt[i] - 1] if mask >> i & 1 else GAP for i in range(m)
        ]

    def walk(pos: Tuple[int, ...], acc: float) -> None:
        nonlocal best
        if pos == end:
            best = max(best, acc)
            return
        for mask in range(1, 1 << m):
            nxt = moved(pos, mask)
            if nxt is not None:
                walk(nxt, acc + _column_value(column(nxt, mask)))

    for face in product(*(range(n + 1) for n in lengths)):
        if all(face):
            continue
        start = _start_score(face, lengths, free_start)
        for mask in range(1, 1 << m):
            nxt = moved(face, mask)
            if nxt is not None and all(nxt):
                walk(nxt, start + _column_value(column(nxt, mask)))
    return best


def needleman_wunsch_score(
    a: Sequence[int], b: Sequence[int], free_start: bool = False
) -> float:
    """
    Classical two-row Needleman-Wunsch table: match 2, mismatch 0, gap -1,
    first row and column spaced evenly from 0 down to -2 * d (all 0 with
    free_start).
    """
    n, m = len(a), len(b)
    table = [[0.0] * (m + 1) for _ in range(n + 1)]
    if not free_start:
        for i, value in enumerate(np.linspace(0, -2 * (n + 1), n + 1)):
            table[i][0] = float(value)
        for j, value in enumerate(np.linspace(0, -2 * (m + 1), m + 1)):
            table[0][j] = float(value)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            table[i][j] = max(
                table[i - 1][j - 1] + (2.0 if a[i - 1] == b[j - 1] else 0.0),
                table[i - 1][j] - 1.0,
                table[i][j - 1] - 1.0,
            )
    return table[n][m]


def path_score(rows: Sequence[Sequence[int]], free_start: bool = False) -> float:
    """Score of the path an alignment's rows trace, by the rules above."""
    m = len(rows)
    lengths = [sum(1 for token in row if token != GAP) for row in rows]
    pos = [0] * m
    face: Tuple[int, ...] = tuple(pos)
    total: Optional[float] = None
    for column in zip(*rows):
        pos = [c + (token != GAP) for c, token in zip(pos, column)]
        if total is not None:
            total += _column_value(column)
        elif all(pos):
            total = _start_score(face, lengths, free_start) + _column_value(column)
        else:
            face = tuple(pos)
    return _start_score(face, lengths, free_start) if total is None else total
