__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"

import json

import pytest

from ..tools import cli
from ..tools.cli import build_parser, main, resolve_config
from ..tools.config import AUTO
from ..tools.exceptions import EXIT_DATA, EXIT_OK, EXIT_USAGE
from ..tools.file_formats import (
    ground_truth_path,
    ids_in,
    prediction_path,
    read_ground_truth,
    read_prediction,
    write_prediction,
    write_sequence,
)
from ..tools.metrics import Prediction


def folder_contents(folder):
    return {path.name: path.read_bytes() for path in sorted(folder.iterdir())}


def test_help(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--help"])
    assert e.value.code == EXIT_OK
    assert "generate" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["mine"],
        ["generate", "--tier", "dirty"],
        ["mine", "x.seq.jsonl", "--k", "1"],
    ],
)
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as e:
        main(argv)
    assert e.value.code == EXIT_USAGE


def test_resolve_config_from_flags(tmp_path):
    ini = tmp_path / "settings.ini"
    ini.write_text("[mining]\nbuffer = 0.1\n[run]\nseed = 4\n")
    args = build_parser().parse_args(
        ["mine", "a.seq.jsonl", "--config", str(ini), "--k", "auto", "--no-rerank"]
    )

    cfg = resolve_config(args)

    assert cfg.k == AUTO
    assert cfg.rerank is False
    assert cfg.buffer == 0.1
    assert cfg.seed == 4


def test_generate_is_deterministic(tmp_path, capsys):
    first, second = tmp_path / "first", tmp_path / "second"

    assert main(["generate", "--count", "2", "--seed", "5", "--out", str(first)]) == 0
    assert main(["generate", "--count", "2", "--seed", "5", "--out", str(second)]) == 0

    assert folder_contents(first) == folder_contents(second)
    assert len(folder_contents(first)) == 4
    assert "Wrote 2 clean period sequences" in capsys.readouterr().out


def test_generate_seed_from_config_file(tmp_path):
    ini = tmp_path / "settings.ini"
    ini.write_text("[run]\nseed = 5\n")

    first, second = str(tmp_path / "a"), str(tmp_path / "b")

    main(["generate", "--count", "1", "--seed", "5", "--out", first])
    main(["generate", "--count", "1", "--config", str(ini), "--out", second])

    assert folder_contents(tmp_path / "a") == folder_contents(tmp_path / "b")


def test_generate_into_unwritable_location(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("not a folder")

    code = main(["generate", "--count", "1", "--out", str(blocker)])

    assert code == EXIT_DATA


def _perfect_predictions(folder):
    for seq_id in ids_in(folder, ".gt.json"):
        gt = read_ground_truth(ground_truth_path(folder, seq_id))
        write_prediction(
            prediction_path(folder, seq_id),
            Prediction(seq_id, gt.segmentation, gt.remaining_proportion, gt.anomaly),
        )


@pytest.mark.parametrize("task", ["period", "completion", "anomaly"])
def test_evaluate_ground_truth_against_itself(tmp_path, capsys, task):
    suite = tmp_path / "suite"
    main(["generate", "--count", "2", "--task", task, "--out", str(suite)])
    _perfect_predictions(suite)
    report = tmp_path / "report.json"

    code = main(
        ["evaluate", "--pred", str(suite), "--gt", str(suite), "--out", str(report)]
    )

    assert code == EXIT_OK
    document = json.loads(report.read_text())
    assert document["format"] == "periodflow-report"
    assert len(document["per_sequence"]) == 2
    if task == "period":
        assert document["mape"] == 0.0
        assert document["tiou_period"] == 1.0
        assert "tiou_period: 1.0000" in capsys.readouterr().out
    elif task == "completion":
        assert document["mae"] == 0.0
    else:
        assert document["tiou_anomaly"] == 1.0


def test_evaluate_without_predictions(tmp_path):
    suite, empty = tmp_path / "suite", tmp_path / "empty"
    empty.mkdir()
    main(["generate", "--count", "1", "--out", str(suite)])

    code = main(["evaluate", "--pred", str(empty), "--gt", str(suite)])

    assert code == EXIT_DATA


def test_evaluate_with_mismatched_ids(tmp_path):
    suite = tmp_path / "suite"
    main(["generate", "--count", "2", "--out", str(suite)])
    _perfect_predictions(suite)
    prediction_path(suite, "clean-period-000").unlink()

    code = main(["evaluate", "--pred", str(suite), "--gt", str(suite)])

    assert code == EXIT_DATA


def test_mine_track_and_detect(tmp_path, capsys, clean_item):
    sequence = write_sequence(tmp_path / "clean.seq.jsonl", clean_item.sequence)
    out = tmp_path / "out"
    pipeline = ["--k", "7", "--top-f", "6", "--out", str(out)]

    assert main(["mine", str(sequence)] + pipeline) == EXIT_OK
    assert "clean: 6 periods" in capsys.readouterr().out

    workflow = str(out / "clean.workflow.json")
    assert main(["track", str(sequence), "--workflow", workflow] + pipeline) == EXIT_OK
    assert "clean: remaining" in capsys.readouterr().out

    code = main(["detect-anomaly", str(sequence), "--workflow", workflow] + pipeline)
    assert code == EXIT_OK

    prediction = read_prediction(prediction_path(out, "clean"))
    assert prediction.segmentation.count == 6
    assert 0.0 <= prediction.remaining <= 1.0


def test_mine_missing_file(tmp_path):
    code = main(["mine", str(tmp_path / "absent.seq.jsonl"), "--out", str(tmp_path)])
    assert code == EXIT_DATA


def test_track_without_workflow_file(tmp_path, clean_item):
    sequence = write_sequence(tmp_path / "clean.seq.jsonl", clean_item.sequence)

    code = main(
        ["track", str(sequence), "--workflow", str(tmp_path / "absent.workflow.json")]
    )

    assert code == EXIT_DATA


def test_benchmark_report(tmp_path, capsys):
    out = tmp_path / "bench.json"

    code = main(
        [
            "benchmark",
            "--count",
            "1",
            "--task",
            "period",
            "--seed",
            "2",
            "--out",
            str(out),
        ]
    )

    assert code == EXIT_OK
    document = json.loads(out.read_text())
    assert set(document["tasks"]) == {"period"}
    assert "workers" not in document["config"]
    assert "mae: n/a" in capsys.readouterr().out


@pytest.mark.parametrize("flags, expected", [([], False), (["--gt-alphabet"], True)])
def test_benchmark_ground_truth_alphabet_is_opt_in(mocker, tmp_path, flags, expected):
    run = mocker.patch.object(cli, "run_benchmark", wraps=cli.run_benchmark)
    out = tmp_path / "bench.json"

    code = main(
        ["benchmark", "--count", "1", "--task", "period", "--out", str(out)] + flags
    )

    assert code == EXIT_OK
    assert run.call_args.kwargs["gt_alphabet"] is expected
    assert json.loads(out.read_text())["gt_alphabet"] is expected
