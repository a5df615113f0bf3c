"""End-to-end benchmark: generate suites, run every task and score them."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .config import Config
from .datagen import generate_suite
from .decorations import taskify
from .metrics import EvalReport, Prediction, evaluate
from .model import FeatureSequence, GroundTruth
from .stream_tasks import localize_in_final_period, track_completion
from .tasks import run_tasks
from .workflow_miner import mine, reference_workflow

__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"

LOGGER = logging.getLogger(__name__)

Item = Tuple[FeatureSequence, GroundTruth]


def predict(seq: FeatureSequence, task: str, cfg: Config) -> Prediction:
    """
    Mine the sequence and answer the given task on it.

    Completion and anomaly answers come from streaming the sequence's own
    transcript through the mined workflow. For anomalies the workflow is
    mined again without the final period (see reference_workflow).
    """
    result = mine(seq, cfg)
    if task == "completion":
        estimate = track_completion(
            result.transcript, result.workflow, cfg.resync_fraction
        )
        return Prediction(seq.id, result.periods, remaining=estimate.remaining)
    if task == "anomaly":
        reference = reference_workflow(seq, result, cfg)
        report = localize_in_final_period(result.transcript, reference, cfg)
        return Prediction(seq.id, result.periods, anomaly=report.interval)
    return Prediction(seq.id, result.periods)


@taskify
def _predict_task(seq: FeatureSequence, task: str, cfg: Config) -> Prediction:
    return predict(seq, task, cfg)


def item_config(gt: GroundTruth, cfg: Config, gt_alphabet: bool = False) -> Config:
    """The run configuration, with K set to the true alphabet size on request."""
    if gt_alphabet and gt.alphabet_size is not None:
        return cfg.replace(k=max(2, gt.alphabet_size))
    return cfg


def predict_all(
    items: Sequence[Item], cfg: Config, gt_alphabet: bool = False
) -> List[Prediction]:
    """
    Predictions for every item, computed on cfg.workers threads. An item
    whose pipeline fails gets an empty prediction.
    """
    tasks = [
        _predict_task(seq, gt.task, item_config(gt, cfg, gt_alphabet))
        for seq, gt in items
    ]
    results = run_tasks(tasks, cfg.workers)
    predictions = []
    for (seq, gt), task, ok in zip(items, tasks, results):
        if ok:
            predictions.append(task.result)
        else:
            LOGGER.warning(f"No prediction for {gt.id or seq.id}")
            predictions.append(Prediction(gt.id or seq.id))
    return predictions


@dataclass(frozen=True)
class BenchmarkReport:
    tier: str
    count: int
    seed: int
    gap_scale: float
    config: Config
    reports: Dict[str, EvalReport] = field(default_factory=dict)
    gt_alphabet: bool = False

    def to_dict(self) -> Dict[str, Any]:
        config = self.config.to_dict()
        # thread count does not influence results
        config.pop("workers")
        return {
            "tier": self.tier,
            "count": self.count,
            "seed": self.seed,
            "gap_scale": self.gap_scale,
            "config": config,
            "gt_alphabet": self.gt_alphabet,
            "tasks": {task: report.to_dict() for task, report in self.reports.items()},
        }

    def summary(self) -> Dict[str, Optional[float]]:
        """The four aggregates, each from the suite of its own task."""
        summary: Dict[str, Optional[float]] = {}
        sources = {
            "mape": "period",
            "tiou_period": "period",
            "mae": "completion",
            "tiou_anomaly": "anomaly",
        }
        for metric, task in sources.items():
            report = self.reports.get(task)
            summary[metric] = None if report is None else report.aggregates()[metric]
        return summary


def run_benchmark(
    tier: str,
    count: int,
    seed: int,
    tasks: Sequence[str],
    cfg: Config,
    gap_scale: float = 1.0,
    gt_alphabet: bool = False,
) -> BenchmarkReport:
    """
    Generate one suite per task and evaluate the pipeline on it.

    :param tier: datagen tier
    :param count: sequences per task
    :param seed: suite seed, shared by the task suites
    :param tasks: tasks to run
    :param cfg: pipeline configuration
    :param gap_scale: centroid gap factor of the suites
    :param gt_alphabet: use each sequence's true alphabet size as K instead of
        cfg.k, which leaks ground truth into the pipeline; off for headline
        numbers
    """
    reports = {}
    for task in tasks:
        items = generate_suite(tier, count, seed, task, gap_scale)
        predictions = predict_all(items, cfg, gt_alphabet)
        reports[task] = evaluate(predictions, [gt for _, gt in items])
        LOGGER.info(
            f"{tier}/{task}: "
            + ", ".join(
                f"{name}={value:.4f}"
                for name, value in reports[task].aggregates().items()
                if value is not None
            )
        )
    return BenchmarkReport(tier, count, seed, gap_scale, cfg, reports, gt_alphabet)
