"""Command line interface.

Results go to standard output, log records to standard error. Exit codes
are 0 on success, 1 on usage errors, 2 on data errors and 3 on internal
errors.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, List, Optional, Sequence

from .. import __version__
from .benchmark import run_benchmark
from .config import AUTO, WINDOW_TOKENS, Config
from .custom_logging import setup_loggers
from .datagen import TIERS, generate, suite_specs
from .decorations import log_if_fails, taskify
from .exceptions import (
    EXIT_DATA,
    EXIT_INTERNAL,
    EXIT_OK,
    EXIT_USAGE,
    FileFormatException,
    IdMismatch,
    PeriodFlowException,
)
from .file_formats import (
    GROUND_TRUTH_SUFFIX,
    PREDICTION_SUFFIX,
    dumps,
    ground_truth_path,
    ids_in,
    prediction_path,
    read_ground_truth,
    read_prediction,
    read_sequence,
    read_workflow,
    sequence_path,
    update_prediction,
    workflow_path,
    write_ground_truth,
    write_mining_result,
    write_report,
    write_sequence,
    write_text_atomic,
)
from .metrics import evaluate
from .model import TASKS, FeatureSequence
from .resources import package_name
from .settings import load_user_settings
from .stream_tasks import localize_in_final_period, track_completion
from .tasks import BaseTask, run_tasks
from .tokenizer import hard_tokenize
from .workflow_miner import mine

__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"

LOGGER = logging.getLogger(__name__)

BENCHMARK_TASKS = ("all",) + TASKS


class ArgumentParser(argparse.ArgumentParser):
    """Argument parser exiting with the usage exit code on bad arguments."""

    def error(self, message: str) -> None:  # type: ignore
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _k_value(value: str) -> Any:
    if value.strip().lower() == AUTO:
        return AUTO
    try:
        k = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or '{AUTO}'")
    if k < 2:
        raise argparse.ArgumentTypeError("k must be at least 2")
    return k


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI file with settings")
    common.add_argument(
        "-v", "--verbose", action="store_true", help="log debug messages"
    )
    common.add_argument("-q", "--quiet", action="store_true", help="log warnings only")
    common.add_argument("--seed", type=int, help="seed of every random choice")
    common.add_argument("--workers", type=int, help="worker threads")
    return common


def _pipeline_options() -> argparse.ArgumentParser:
    pipeline = argparse.ArgumentParser(add_help=False)
    pipeline.add_argument(
        "--k", type=_k_value, help=f"codebook size, an integer or '{AUTO}'"
    )
    pipeline.add_argument("--buffer", type=float, help="segment buffer fraction")
    pipeline.add_argument("--top-f", type=int, help="window candidates kept")
    pipeline.add_argument(
        "--no-rerank",
        dest="rerank",
        action="store_false",
        default=None,
        help="skip the DTW re-ranking of window candidates",
    )
    pipeline.add_argument(
        "--window-token",
        choices=WINDOW_TOKENS,
        help="token type used for the window initialization",
    )
    pipeline.add_argument(
        "--max-joint", type=int, help="largest segment count aligned jointly"
    )
    pipeline.add_argument(
        "--min-anomaly-frames", type=int, help="shortest reported deviation"
    )
    pipeline.add_argument(
        "--merge-gap", type=int, help="deviations closer than this are merged"
    )
    return pipeline


def build_parser() -> ArgumentParser:
    common = _common_options()
    pipeline = _pipeline_options()
    parser = ArgumentParser(
        prog=package_name(),
        description="Training-free mining of periodic workflows in feature sequences.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")

    generate_parser = commands.add_parser(
        "generate", parents=[common], help="write a synthetic suite"
    )
    generate_parser.add_argument("--tier", choices=sorted(TIERS), default="clean")
    generate_parser.add_argument("--count", type=int, default=10)
    generate_parser.add_argument("--task", choices=TASKS, default="period")
    generate_parser.add_argument(
        "--gap-scale", type=float, default=1.0, help="centroid gap factor"
    )
    generate_parser.add_argument("--out", type=Path, default=Path("."))
    generate_parser.set_defaults(handler=cmd_generate)

    mine_parser = commands.add_parser(
        "mine", parents=[common, pipeline], help="mine workflows and periods"
    )
    mine_parser.add_argument("sequences", nargs="+", type=Path, help="sequence files")
    mine_parser.add_argument("--out", type=Path, default=Path("."))
    mine_parser.set_defaults(handler=cmd_mine)

    for name, handler, summary in (
        ("track", cmd_track, "estimate the remaining part of the last period"),
        ("detect-anomaly", cmd_detect_anomaly, "localize the anomaly of the last period"),
    ):
        stream_parser = commands.add_parser(
            name, parents=[common, pipeline], help=summary
        )
        stream_parser.add_argument("sequence", type=Path, help="sequence file")
        stream_parser.add_argument(
            "--workflow", type=Path, required=True, help="mined workflow file"
        )
        stream_parser.add_argument("--out", type=Path, default=Path("."))
        stream_parser.set_defaults(handler=handler)

    evaluate_parser = commands.add_parser(
        "evaluate", parents=[common], help="score predictions against ground truth"
    )
    evaluate_parser.add_argument("--pred", type=Path, required=True)
    evaluate_parser.add_argument("--gt", type=Path, required=True)
    evaluate_parser.add_argument("--out", type=Path, default=Path("report.json"))
    evaluate_parser.set_defaults(handler=cmd_evaluate)

    benchmark_parser = commands.add_parser(
        "benchmark", parents=[common, pipeline], help="generate, predict and score"
    )
    benchmark_parser.add_argument("--tier", choices=sorted(TIERS), default="clean")
    benchmark_parser.add_argument("--count", type=int, default=10)
    benchmark_parser.add_argument("--task", choices=BENCHMARK_TASKS, default="all")
    benchmark_parser.add_argument("--gap-scale", type=float, default=1.0)
    benchmark_parser.add_argument(
        "--gt-alphabet",
        action="store_true",
        help="set K to the true alphabet size of each sequence (leaks ground truth)",
    )
    benchmark_parser.add_argument(
        "--out", type=Path, default=Path("benchmark_report.json")
    )
    benchmark_parser.set_defaults(handler=cmd_benchmark)
    return parser


def resolve_config(args: argparse.Namespace) -> Config:
    """Settings first, then the flags given on the command line."""
    if getattr(args, "config", None) is not None:
        load_user_settings(args.config)
    cfg = Config.from_settings()
    return cfg.replace(
        **{
            name: getattr(args, name, None)
            for name in (
                "k",
                "buffer",
                "top_f",
                "rerank",
                "window_token",
                "max_joint",
                "min_anomaly_frames",
                "merge_gap",
                "seed",
                "workers",
            )
        }
    )


def _failure_code(tasks: Sequence[BaseTask], results: Sequence[bool]) -> int:
    code = EXIT_OK
    for task, ok in zip(tasks, results):
        if ok:
            continue
        if isinstance(task.exception, PeriodFlowException):
            code = max(code, task.exception.exit_code)
        elif isinstance(task.exception, OSError):
            code = max(code, EXIT_DATA)
        else:
            code = max(code, EXIT_INTERNAL)
    return code


def _run(tasks: List[BaseTask], workers: int) -> int:
    return _failure_code(tasks, run_tasks(tasks, workers))


def _write_item(out: Path, spec: Any) -> str:
    seq, gt = generate(spec)
    write_sequence(sequence_path(out, spec.id), seq)
    write_ground_truth(ground_truth_path(out, spec.id), gt)
    return spec.id


@log_if_fails
def cmd_generate(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    specs = suite_specs(args.tier, args.count, cfg.seed, args.task, args.gap_scale)
    tasks: List[BaseTask] = [taskify(_write_item)(args.out, spec) for spec in specs]
    code = _run(tasks, cfg.workers)
    if code == EXIT_OK:
        print(f"Wrote {len(specs)} {args.tier} {args.task} sequences to {args.out}")
    return code


def _seq_id(seq: FeatureSequence, path: Path) -> str:
    return seq.id or path.name.split(".")[0]


def _mine_file(path: Path, out: Path, cfg: Config) -> str:
    seq = read_sequence(path)
    seq_id = _seq_id(seq, path)
    result = mine(seq, cfg)
    write_mining_result(workflow_path(out, seq_id), result, seq_id, cfg.to_dict())
    update_prediction(
        prediction_path(out, seq_id), seq_id, segmentation=result.periods
    )
    return f"{seq_id}: {result.periods.count} periods, workflow {result.workflow.render()}"


@log_if_fails
def cmd_mine(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    tasks: List[BaseTask] = [
        taskify(_mine_file)(path, args.out, cfg) for path in args.sequences
    ]
    results = run_tasks(tasks, cfg.workers)
    for task, ok in zip(tasks, results):
        if ok:
            print(task.result)  # type: ignore
    return _failure_code(tasks, results)


def _stream_input(args: argparse.Namespace) -> Any:
    if not args.workflow.exists():
        raise FileFormatException(f"Workflow file {args.workflow} does not exist")
    document = read_workflow(args.workflow)
    seq = read_sequence(args.sequence)
    transcript = hard_tokenize(seq, document.codebook)
    return seq, document, transcript


@log_if_fails
def cmd_track(args: argparse.Namespace) -> None:
    cfg = resolve_config(args)
    seq, document, transcript = _stream_input(args)
    estimate = track_completion(transcript, document.workflow, cfg.resync_fraction)
    seq_id = _seq_id(seq, args.sequence)
    update_prediction(
        prediction_path(args.out, seq_id), seq_id, remaining=estimate.remaining
    )
    print(f"{seq_id}: remaining {estimate.remaining:.4f}")


@log_if_fails
def cmd_detect_anomaly(args: argparse.Namespace) -> None:
    cfg = resolve_config(args)
    seq, document, transcript = _stream_input(args)
    report = localize_in_final_period(transcript, document.workflow, cfg)
    seq_id = _seq_id(seq, args.sequence)
    update_prediction(prediction_path(args.out, seq_id), seq_id, anomaly=report.interval)
    if report.interval is None:
        print(f"{seq_id}: no anomaly")
        return
    seconds = report.seconds(seq.frame_rate)
    print(
        f"{seq_id}: anomaly frames [{report.interval.start}, {report.interval.end}) "
        f"seconds [{seconds.start:.3f}, {seconds.end:.3f})"  # type: ignore
    )


def _print_aggregates(aggregates: dict) -> None:
    for name, value in aggregates.items():
        print(f"{name}: {'n/a' if value is None else f'{value:.4f}'}")


@log_if_fails
def cmd_evaluate(args: argparse.Namespace) -> None:
    resolve_config(args)
    pred_ids = ids_in(args.pred, PREDICTION_SUFFIX)
    gt_ids = ids_in(args.gt, GROUND_TRUTH_SUFFIX)
    if not pred_ids:
        raise FileFormatException(f"No prediction files in {args.pred}")
    if not gt_ids:
        raise FileFormatException(f"No ground truth files in {args.gt}")
    missing = sorted(set(gt_ids) - set(pred_ids))
    unexpected = sorted(set(pred_ids) - set(gt_ids))
    if missing or unexpected:
        raise IdMismatch(details={"missing": missing, "unexpected": unexpected})

    predictions = [read_prediction(prediction_path(args.pred, i)) for i in gt_ids]
    truths = [read_ground_truth(ground_truth_path(args.gt, i)) for i in gt_ids]
    report = evaluate(predictions, truths)
    write_report(args.out, report)
    _print_aggregates(report.aggregates())


@log_if_fails
def cmd_benchmark(args: argparse.Namespace) -> None:
    cfg = resolve_config(args)
    tasks = TASKS if args.task == "all" else (args.task,)
    report = run_benchmark(
        args.tier,
        args.count,
        cfg.seed,
        tasks,
        cfg,
        args.gap_scale,
        gt_alphabet=args.gt_alphabet,
    )
    write_text_atomic(args.out, dumps(report.to_dict()))
    _print_aggregates(report.summary())


def _stream_level(args: argparse.Namespace) -> Optional[int]:
    if getattr(args, "verbose", False):
        return logging.DEBUG
    if getattr(args, "quiet", False):
        return logging.WARNING
    return None


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler: Optional[Callable[[argparse.Namespace], int]] = getattr(
        args, "handler", None
    )
    if handler is None:
        parser.error("a command is required")
        return EXIT_USAGE

    teardown = setup_loggers(package_name(), stream_level=_stream_level(args))
    try:
        return handler(args)
    finally:
        teardown()
