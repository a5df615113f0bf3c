"""Evaluation metrics of the three benchmark tasks.

Period counting is scored with the mean absolute percentage error of the
counts and with the Hungarian-matched temporal IoU of the periods,
completion tracking with the mean absolute error of the remaining
proportion and anomaly localization with the temporal IoU of the single
predicted interval.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .exceptions import IdMismatch, InvalidGroundTruth, LengthMismatch, OutOfRange
from .model import GroundTruth, Interval, PeriodSegmentation

__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"

LOGGER = logging.getLogger(__name__)

MIN_GT_PERIODS = 3


@dataclass(frozen=True)
class Matching:
    pairs: Tuple[Tuple[int, int], ...]
    total: float


def _check_lengths(preds: Sequence[Any], gts: Sequence[Any]) -> None:
    if len(preds) != len(gts):
        raise LengthMismatch(
            f"{len(preds)} predictions for {len(gts)} ground truths",
            {"predictions": len(preds), "ground_truths": len(gts)},
        )
    if not gts:
        raise LengthMismatch("Nothing to evaluate")


def _check_gt_count(count: int) -> None:
    if count < MIN_GT_PERIODS:
        raise InvalidGroundTruth(
            f"Ground truth holds {count} periods, at least {MIN_GT_PERIODS} needed"
        )


def tiou_interval(a: Interval, b: Interval) -> float:
    """Temporal intersection over union of two intervals."""
    overlap = max(0.0, float(min(a.end, b.end) - max(a.start, b.start)))
    union = float(max(a.end, b.end) - min(a.start, b.start))
    return overlap / union


def hungarian(scores: Any) -> Matching:
    """Maximum-total one-to-one assignment covering min(rows, columns) pairs."""
    matrix = np.asarray(scores, dtype=float)
    if matrix.ndim != 2 or 0 in matrix.shape:
        raise OutOfRange("Score matrix must be a non-empty 2-D matrix")
    rows, columns = linear_sum_assignment(matrix, maximize=True)
    pairs = tuple((int(r), int(c)) for r, c in zip(rows, columns))
    return Matching(pairs, float(matrix[rows, columns].sum()))


def mape(preds: Sequence[int], gts: Sequence[int]) -> float:
    _check_lengths(preds, gts)
    for gt in gts:
        _check_gt_count(gt)
    return float(np.mean([abs(p - g) / g for p, g in zip(preds, gts)]))


def period_tiou(pred: PeriodSegmentation, gt: PeriodSegmentation) -> float:
    """Matched tIoU of one sequence, normalized by the ground truth count."""
    _check_gt_count(gt.count)
    if pred.count == 0:
        return 0.0
    matrix = [
        [tiou_interval(p, g) for g in gt.boundaries] for p in pred.boundaries
    ]
    return hungarian(matrix).total / gt.count


def tiou_period(
    preds: Sequence[PeriodSegmentation], gts: Sequence[PeriodSegmentation]
) -> float:
    _check_lengths(preds, gts)
    return float(np.mean([period_tiou(p, g) for p, g in zip(preds, gts)]))


def _check_proportion(value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise OutOfRange(f"Proportion {value} outside of [0, 1]")


def mae(preds: Sequence[float], gts: Sequence[float]) -> float:
    _check_lengths(preds, gts)
    for value in list(preds) + list(gts):
        _check_proportion(value)
    return float(np.mean([abs(p - g) for p, g in zip(preds, gts)]))


def anomaly_tiou(pred: Optional[Interval], gt: Interval) -> float:
    return 0.0 if pred is None else tiou_interval(pred, gt)


def tiou_anomaly(preds: Sequence[Optional[Interval]], gts: Sequence[Interval]) -> float:
    _check_lengths(preds, gts)
    return float(np.mean([anomaly_tiou(p, g) for p, g in zip(preds, gts)]))


@dataclass(frozen=True)
class Prediction:
    """Predictions for one sequence, every field optional."""

    id: str
    segmentation: Optional[PeriodSegmentation] = None
    remaining: Optional[float] = None
    anomaly: Optional[Interval] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"id": self.id}
        if self.segmentation is not None:
            data.update(self.segmentation.to_dict())
        data["remaining"] = self.remaining
        data["anomaly"] = None if self.anomaly is None else self.anomaly.to_list()
        data.update(self.extra)
        return data

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> "Prediction":
        known = {"id", "count", "boundaries", "remaining", "anomaly"}
        segmentation = (
            PeriodSegmentation.from_dict(data) if "boundaries" in data else None
        )
        return Prediction(
            str(data["id"]),
            segmentation,
            None if data.get("remaining") is None else float(data["remaining"]),
            None if data.get("anomaly") is None else Interval.from_list(data["anomaly"]),
            {key: value for key, value in data.items() if key not in known},
        )


@dataclass(frozen=True)
class SequenceScore:
    id: str
    task: str
    ape: Optional[float] = None
    tiou_period: Optional[float] = None
    ae: Optional[float] = None
    tiou_anomaly: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "task": self.task,
            "mape": self.ape,
            "tiou_period": self.tiou_period,
            "mae": self.ae,
            "tiou_anomaly": self.tiou_anomaly,
        }


@dataclass(frozen=True)
class EvalReport:
    """Aggregates are means over the sequences where the metric applies,
    None when no sequence carries it."""

    mape: Optional[float]
    tiou_period: Optional[float]
    mae: Optional[float]
    tiou_anomaly: Optional[float]
    per_sequence: Tuple[SequenceScore, ...]

    def aggregates(self) -> Dict[str, Optional[float]]:
        return {
            "mape": self.mape,
            "tiou_period": self.tiou_period,
            "mae": self.mae,
            "tiou_anomaly": self.tiou_anomaly,
        }

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = self.aggregates()
        data["per_sequence"] = [score.to_dict() for score in self.per_sequence]
        return data


def _mean(values: List[Optional[float]]) -> Optional[float]:
    present = [value for value in values if value is not None]
    return float(np.mean(present)) if present else None


def score_sequence(pred: Prediction, gt: GroundTruth) -> SequenceScore:
    """
    Per-sequence terms of the metrics the ground truth task calls for.
    Period sequences get the count error and the matched tIoU, completion
    sequences the absolute error of the remaining proportion (the worst
    possible error when nothing was predicted) and anomaly sequences the
    anomaly tIoU.
    """
    if gt.task == "period":
        segmentation = (
            pred.segmentation if pred.segmentation is not None else PeriodSegmentation()
        )
        _check_gt_count(gt.count)
        return SequenceScore(
            gt.id,
            gt.task,
            ape=abs(segmentation.count - gt.count) / gt.count,
            tiou_period=period_tiou(segmentation, gt.segmentation),
        )
    if gt.task == "completion":
        truth = gt.remaining_proportion
        if truth is None:
            raise InvalidGroundTruth(f"Completion ground truth {gt.id} lacks remaining")
        if pred.remaining is None:
            error = max(truth, 1.0 - truth)
        else:
            _check_proportion(pred.remaining)
            error = abs(pred.remaining - truth)
        return SequenceScore(gt.id, gt.task, ae=error)
    if gt.anomaly is None:
        raise InvalidGroundTruth(f"Anomaly ground truth {gt.id} lacks an interval")
    return SequenceScore(gt.id, gt.task, tiou_anomaly=anomaly_tiou(pred.anomaly, gt.anomaly))


def evaluate(preds: Sequence[Prediction], gts: Sequence[GroundTruth]) -> EvalReport:
    """
    Score predictions against ground truths paired by id.

    :raises LengthMismatch: the lists differ in length or are empty
    :raises IdMismatch: the ids of the two lists differ
    """
    _check_lengths(preds, gts)
    by_id = {pred.id: pred for pred in preds}
    missing = sorted(gt.id for gt in gts if gt.id not in by_id)
    if missing:
        raise IdMismatch(details={"missing": missing})

    scores = tuple(
        score_sequence(by_id[gt.id], gt) for gt in sorted(gts, key=lambda g: g.id)
    )
    report = EvalReport(
        _mean([s.ape for s in scores]),
        _mean([s.tiou_period for s in scores]),
        _mean([s.ae for s in scores]),
        _mean([s.tiou_anomaly for s in scores]),
        scores,
    )
    LOGGER.info(
        "Evaluated %d sequences: %s",
        len(scores),
        ", ".join(f"{k}={v}" for k, v in report.aggregates().items()),
    )
    return report
