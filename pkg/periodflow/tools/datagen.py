"""Deterministic synthetic benchmark sequences with ground truth.

Every sequence repeats a token workflow whose tokens are points in feature
space. Token durations are lognormal, features get Gaussian noise and the
ground truth records the exact period boundaries. Completion instances cut
the stream inside the second-last period, anomaly instances splice a
foreign token into the final period.
"""

import dataclasses
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import CentroidRejectionExhausted, InvalidSetting
from .model import (
    TASKS,
    Codebook,
    FeatureSequence,
    GroundTruth,
    Interval,
    Slot,
    Workflow,
)

__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"

LOGGER = logging.getLogger(__name__)

MIN_PERIODS = 5
MAX_PERIODS = 8
MAX_CENTROID_ATTEMPTS = 10_000
ANOMALY_FRACTION = (0.1, 0.2)


@dataclass(frozen=True)
class TierProfile:
    jitter: float
    noise: float
    branches: int
    skip_prob: float


TIERS: Dict[str, TierProfile] = {
    "clean": TierProfile(jitter=0.05, noise=0.05, branches=0, skip_prob=0.0),
    "jittered": TierProfile(jitter=0.2, noise=0.1, branches=1, skip_prob=0.0),
    "noisy": TierProfile(jitter=0.3, noise=0.25, branches=1, skip_prob=0.05),
}

K_RANGE = (6, 14)
N_RANGE = (3, 6)
TOKEN_FRAMES_RANGE = (6.0, 12.0)


@dataclass(frozen=True)
class GenSpec:
    """
    Parameters of one synthetic sequence.

    :param K: alphabet size, the number of centroids
    :param n: feature dimension
    :param workflow_len: number of workflow slots
    :param periods: number of repetitions, between 5 and 8
    :param mean_token_frames: mean frames per token
    :param jitter: sigma of the lognormal token durations
    :param noise: feature noise std as a fraction of min_gap
    :param branch_slots: slots given a second alternative, alternating by period
    :param skip_prob: probability that a non-first slot is left out of a period
    :param gap_scale: factor on the enforced centroid gap, below 1 makes clusters overlap
    """

    K: int
    n: int
    workflow_len: int
    periods: int
    mean_token_frames: float
    jitter: float = 0.05
    noise: float = 0.05
    branch_slots: Tuple[int, ...] = ()
    skip_prob: float = 0.0
    task: str = "period"
    seed: int = 0
    id: str = ""
    frame_rate: float = 30.0
    min_gap: float = 1.0
    gap_scale: float = 1.0
    box_scale: float = 3.0

    def __post_init__(self) -> None:  # noqa: C901
        object.__setattr__(self, "branch_slots", tuple(sorted(set(self.branch_slots))))
        if self.task not in TASKS:
            raise InvalidSetting(f"Unknown task {self.task!r}")
        if not MIN_PERIODS <= self.periods <= MAX_PERIODS:
            raise InvalidSetting(
                f"periods must be in [{MIN_PERIODS}, {MAX_PERIODS}], got {self.periods}"
            )
        if self.workflow_len < 3:
            raise InvalidSetting("workflow_len must be at least 3")
        if self.tokens_needed > self.K:
            raise InvalidSetting(
                f"{self.tokens_needed} distinct tokens needed, alphabet has {self.K}"
            )
        if any(not 1 <= slot < self.workflow_len for slot in self.branch_slots):
            raise InvalidSetting("Branch slots must be non-first workflow slots")
        if self.n < 1 or self.mean_token_frames < 1:
            raise InvalidSetting("n and mean_token_frames must be at least 1")
        if self.jitter < 0 or self.noise < 0:
            raise InvalidSetting("jitter and noise must be nonnegative")
        if not 0 <= self.skip_prob < 1:
            raise InvalidSetting("skip_prob must be in [0, 1)")
        if self.min_gap <= 0 or self.gap_scale <= 0 or self.box_scale <= 0:
            raise InvalidSetting("Gap and box scales must be positive")

    @property
    def tokens_needed(self) -> int:
        return self.workflow_len + len(self.branch_slots) + int(self.task == "anomaly")

    @property
    def gap(self) -> float:
        return self.min_gap * self.gap_scale

    def to_dict(self) -> Dict[str, Any]:
        data = dataclasses.asdict(self)
        data["branch_slots"] = list(self.branch_slots)
        return data


@dataclass(frozen=True)
class GeneratedSequence:
    """Generated sequence with its ground truth and the generating centroids.

    tokens holds the true token of every frame.
    """

    spec: GenSpec
    sequence: FeatureSequence
    ground_truth: GroundTruth
    centroids: np.ndarray
    tokens: np.ndarray

    def codebook(self) -> Codebook:
        return Codebook(self.centroids)


def _draw_centroids(rng: np.random.Generator, spec: GenSpec) -> np.ndarray:
    side = spec.box_scale * spec.gap * spec.K ** (1 / spec.n)
    accepted: List[np.ndarray] = []
    for _ in range(MAX_CENTROID_ATTEMPTS):
        candidate = rng.uniform(0.0, side, size=spec.n)
        if accepted and cdist([candidate], accepted).min() < spec.gap:
            continue
        accepted.append(candidate)
        if len(accepted) == spec.K:
            return np.array(accepted)
    raise CentroidRejectionExhausted(
        details={"K": spec.K, "n": spec.n, "gap": spec.gap}
    )


def _duration(rng: np.random.Generator, spec: GenSpec) -> int:
    sigma = spec.jitter
    factor = np.exp(sigma * rng.standard_normal() - sigma ** 2 / 2)
    return max(1, int(np.floor(spec.mean_token_frames * factor + 0.5)))


def _realize_periods(
    rng: np.random.Generator,
    spec: GenSpec,
    main: np.ndarray,
    alternates: Dict[int, int],
) -> Tuple[List[List[int]], List[bool]]:
    """Frame tokens of every period and, per slot, whether any period skipped it."""
    skipped = [False] * spec.workflow_len
    periods = []
    for period in range(spec.periods):
        frames: List[int] = []
        for slot in range(spec.workflow_len):
            skip_draw = rng.random()
            if slot > 0 and skip_draw < spec.skip_prob:
                skipped[slot] = True
                continue
            token = int(main[slot])
            if slot in alternates and period % 2 == 1:
                token = alternates[slot]
            frames.extend([token] * _duration(rng, spec))
        periods.append(frames)
    return periods, skipped


def _gt_workflow(
    spec: GenSpec, main: np.ndarray, alternates: Dict[int, int], skipped: List[bool]
) -> Workflow:
    slots = []
    for slot in range(spec.workflow_len):
        alternatives = {int(main[slot])}
        if slot in alternates:
            alternatives.add(alternates[slot])
        slots.append(
            Slot(
                frozenset(alternatives),
                skipped[slot],
                spec.mean_token_frames,
                majority=int(main[slot]),
            )
        )
    anchor = next((slot for slot in slots if not slot.skippable), slots[0])
    return Workflow(tuple(slots), int(anchor.majority))  # type: ignore


def generate_item(spec: GenSpec) -> GeneratedSequence:
    """
    Generate one sequence with everything needed to check it.

    :raises CentroidRejectionExhausted: the centroids cannot be separated
    """
    rng = np.random.default_rng(spec.seed)
    centroids = _draw_centroids(rng, spec)

    order = rng.permutation(spec.K)
    main = order[: spec.workflow_len]
    extra = order[spec.workflow_len :]
    alternates = {
        slot: int(extra[index]) for index, slot in enumerate(spec.branch_slots)
    }
    foreign = int(extra[len(spec.branch_slots)]) if spec.task == "anomaly" else None

    periods, skipped = _realize_periods(rng, spec, main, alternates)
    workflow = _gt_workflow(spec, main, alternates, skipped)

    remaining: Optional[float] = None
    anomaly: Optional[Interval] = None
    if spec.task == "completion":
        cut = periods[-2]
        emitted = int(rng.integers(1, max(2, len(cut))))
        remaining = 1.0 - emitted / len(cut)
        periods = periods[:-2] + [cut[:emitted]]
    elif spec.task == "anomaly":
        final = periods[-1]
        low, high = ANOMALY_FRACTION
        size = max(1, int(np.floor(rng.uniform(low, high) * len(final) + 0.5)))
        position = int(rng.integers(1, max(2, len(final))))
        periods[-1] = final[:position] + [foreign] * size + final[position:]
        offset = sum(len(period) for period in periods[:-1])
        anomaly = Interval(offset + position, offset + position + size)

    tokens = np.array([token for period in periods for token in period], dtype=int)
    boundaries = []
    start = 0
    for period in periods:
        boundaries.append(Interval(start, start + len(period)))
        start += len(period)

    frames = centroids[tokens]
    if spec.noise > 0:
        frames = frames + rng.normal(0.0, spec.noise * spec.min_gap, size=frames.shape)

    sequence = FeatureSequence(frames, spec.frame_rate, spec.id)
    ground_truth = GroundTruth(
        tuple(boundaries),
        workflow.render(),
        anomaly=anomaly,
        remaining_proportion=remaining,
        length=int(tokens.size),
        task=spec.task,
        alphabet_size=int(np.unique(tokens).size),
        id=spec.id,
    )
    LOGGER.debug(
        f"Generated {spec.id or 'sequence'}: {len(periods)} periods, "
        f"{tokens.size} frames, workflow {ground_truth.workflow_tokens}"
    )
    return GeneratedSequence(spec, sequence, ground_truth, centroids, tokens)


def generate(spec: GenSpec) -> Tuple[FeatureSequence, GroundTruth]:
    item = generate_item(spec)
    return item.sequence, item.ground_truth


def suite_specs(
    tier: str, count: int, seed: int, task: str = "period", gap_scale: float = 1.0
) -> List[GenSpec]:
    """Sample count specs of a tier, each with its own seed."""
    if tier not in TIERS:
        raise InvalidSetting(f"Unknown tier {tier!r}, expected one of {sorted(TIERS)}")
    if count < 1:
        raise InvalidSetting("count must be positive")
    profile = TIERS[tier]
    rng = np.random.default_rng(seed)
    seeds = rng.choice(2 ** 31, size=count, replace=False)

    specs = []
    for index, item_seed in enumerate(seeds):
        K = int(rng.integers(K_RANGE[0], K_RANGE[1] + 1))  # noqa: N806
        workflow_len = K - profile.branches - int(task == "anomaly")
        branch_slots = tuple(
            int(slot)
            for slot in rng.choice(
                np.arange(1, workflow_len), size=profile.branches, replace=False
            )
        )
        specs.append(
            GenSpec(
                K=K,
                n=int(rng.integers(N_RANGE[0], N_RANGE[1] + 1)),
                workflow_len=workflow_len,
                periods=int(rng.integers(MIN_PERIODS, MAX_PERIODS + 1)),
                mean_token_frames=float(rng.uniform(*TOKEN_FRAMES_RANGE)),
                jitter=profile.jitter,
                noise=profile.noise,
                branch_slots=branch_slots,
                skip_prob=profile.skip_prob,
                task=task,
                seed=int(item_seed),
                id=f"{tier}-{task}-{index:03d}",
                gap_scale=gap_scale,
            )
        )
    return specs


def generate_suite(
    tier: str, count: int, seed: int, task: str = "period", gap_scale: float = 1.0
) -> List[Tuple[FeatureSequence, GroundTruth]]:
    """
    Generate a benchmark suite of one tier.

    :param tier: clean, jittered or noisy
    :param count: number of sequences
    :param seed: seed of the parameter sampling, item seeds are derived from it
    :param task: period, completion or anomaly
    :param gap_scale: factor on the centroid gap of every item
    """
    return [generate(spec) for spec in suite_specs(tier, count, seed, task, gap_scale)]
