"""Codebook fitting and frame tokenization.

Frames are quantized against K-means centroids into hard tokens (index of
the nearest centroid) and soft tokens (softmax over negated distances).
Run-length compression turns a frame-level transcript into the run
strings consumed by the aligner.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.cluster import kmeans_plusplus
from sklearn.preprocessing import StandardScaler

from .config import AUTO, Config
from .exceptions import TooFewFrames
from .model import (
    Codebook,
    FeatureSequence,
    HardTranscript,
    SoftTranscript,
    TokenRun,
    TokenRunSequence,
)

__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"

LOGGER = logging.getLogger(__name__)


def _assign(points: np.ndarray, centers: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    squared = cdist(points, centers, "sqeuclidean")
    labels = np.argmin(squared, axis=1)
    return labels, squared[np.arange(points.shape[0]), labels]


def _lloyd(
    points: np.ndarray, centers: np.ndarray, max_iter: int, tol: float
) -> Tuple[np.ndarray, float]:
    K = centers.shape[0]  # noqa: N806
    for iteration in range(max_iter):
        labels, squared = _assign(points, centers)
        counts = np.bincount(labels, minlength=K)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, points)
        updated = centers.copy()
        filled = counts > 0
        updated[filled] = sums[filled] / counts[filled, None]

        # empty cluster: steal the point of the largest cluster that lies
        # farthest from its centroid
        for empty in np.flatnonzero(~filled):
            largest = int(np.argmax(counts))
            members = np.flatnonzero(labels == largest)
            farthest = int(members[np.argmax(squared[members])])
            updated[empty] = points[farthest]
            labels[farthest] = empty
            squared[farthest] = 0.0
            counts[largest] -= 1
            counts[empty] += 1

        shift = float(np.max(np.linalg.norm(updated - centers, axis=1)))
        centers = updated
        if shift < tol:
            LOGGER.debug(f"K-means converged after {iteration + 1} iterations")
            break

    _, squared = _assign(points, centers)
    return centers, float(squared.sum())


def _restart_seeds(seed: int, n_init: int) -> List[int]:
    rng = np.random.default_rng(seed)
    return [int(s) for s in rng.integers(0, 2**31 - 1, size=n_init)]


def fit_codebook(
    seq: FeatureSequence,
    K: int,  # noqa: N803
    seed: int = 0,
    normalize: bool = False,
    n_init: int = 1,
    max_iter: int = 300,
    tol: float = 1e-6,
) -> Codebook:
    """
    Fit K centroids with k-means++ seeding followed by Lloyd iterations.

    :param seq: feature sequence
    :param K: number of clusters, at least 2 and at most the frame count
    :param seed: seed of the k-means++ seeding
    :param normalize: z-normalize every dimension before fitting
    :param n_init: number of restarts, the lowest inertia wins
    :param max_iter: maximum Lloyd iterations per restart
    :param tol: convergence threshold on the largest centroid shift
    :raises TooFewFrames: when there are fewer frames than clusters
    """
    if K < 2:
        raise TooFewFrames(f"K must be at least 2, got {K}")
    if seq.T < K:
        raise TooFewFrames(
            f"Cannot fit {K} clusters to {seq.T} frames", {"T": seq.T, "K": K}
        )

    points = np.array(seq.frames, dtype=float)
    shift = scale = None
    if normalize:
        scaler = StandardScaler().fit(points)
        shift, scale = scaler.mean_, scaler.scale_
        points = scaler.transform(points)

    seeds = [seed] if n_init == 1 else _restart_seeds(seed, n_init)
    best: Optional[Tuple[np.ndarray, float]] = None
    for restart_seed in seeds:
        initial, _ = kmeans_plusplus(points, n_clusters=K, random_state=restart_seed)
        centers, inertia = _lloyd(points, initial.astype(float), max_iter, tol)
        if best is None or inertia < best[1]:
            best = (centers, inertia)

    centers, inertia = best  # type: ignore
    LOGGER.debug(f"Fitted codebook K={K} inertia={inertia:.6g}")
    return Codebook(centers, shift, scale, inertia)


def _inertia(seq: FeatureSequence, k: int, seed: int, fit_kwargs: dict) -> float:
    if k > 1:
        return fit_codebook(seq, k, seed, **fit_kwargs).inertia  # type: ignore
    points = np.array(seq.frames, dtype=float)
    if fit_kwargs.get("normalize"):
        points = StandardScaler().fit_transform(points)
    return float(((points - points.mean(axis=0)) ** 2).sum())


def select_k(
    seq: FeatureSequence, k_range: Sequence[int], seed: int = 0, **fit_kwargs: object
) -> int:
    """
    Sweep K over k_range and pick the elbow of the inertia curve: the K with
    the largest second difference of log inertia. The curve is evaluated one
    step beyond each end of the range so that both ends can be picked. Ties
    go to the smaller K.
    """
    k_min, k_max = k_range
    k_max = min(k_max, seq.T - 1)
    if k_max <= k_min:
        return max(2, min(k_min, seq.T))

    ks = list(range(k_min - 1, k_max + 2))
    inertias = np.array([_inertia(seq, k, seed, fit_kwargs) for k in ks])
    # log(0) on noiseless data
    floor = 1e-12 * float(inertias.max()) or 1.0
    curve = np.log(inertias + floor)
    second = curve[:-2] - 2 * curve[1:-1] + curve[2:]
    chosen = k_min + int(np.argmax(second))
    LOGGER.debug(f"Elbow selection over [{k_min}, {k_max}] picked K={chosen}")
    return chosen


def fit_codebook_from_config(seq: FeatureSequence, cfg: Config) -> Codebook:
    fit_kwargs = dict(
        normalize=cfg.normalize, n_init=cfg.n_init, max_iter=cfg.max_iter, tol=cfg.tol
    )
    if cfg.k == AUTO:
        k = select_k(seq, cfg.k_range, cfg.seed, **fit_kwargs)
    else:
        k = int(cfg.k)
    return fit_codebook(seq, k, cfg.seed, **fit_kwargs)  # type: ignore


def _distances(seq: FeatureSequence, cb: Codebook) -> np.ndarray:
    return cdist(cb.transform(seq.frames), cb.centroids, "euclidean")


def hard_tokenize(seq: FeatureSequence, cb: Codebook) -> HardTranscript:
    """Nearest centroid per frame, ties broken toward the lowest index."""
    return HardTranscript(np.argmin(_distances(seq, cb), axis=1), cb.K)


def soft_tokenize(seq: FeatureSequence, cb: Codebook) -> SoftTranscript:
    """Per-frame softmax of negated Euclidean distances to the centroids."""
    logits = -_distances(seq, cb)
    logits -= logits.max(axis=1, keepdims=True)
    weights = np.exp(logits)
    return SoftTranscript(weights / weights.sum(axis=1, keepdims=True))


def rle_compress(t: HardTranscript) -> TokenRunSequence:
    tokens = t.tokens
    if tokens.size == 0:
        return TokenRunSequence(())
    starts = np.concatenate(([0], np.flatnonzero(np.diff(tokens)) + 1))
    ends = np.concatenate((starts[1:], [tokens.size]))
    return TokenRunSequence(
        tuple(
            TokenRun(int(tokens[start]), int(end - start), int(start))
            for start, end in zip(starts, ends)
        )
    )
