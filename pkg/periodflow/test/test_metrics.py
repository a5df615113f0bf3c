__copyright__ = "Copyright 2024, periodflow contributors"
__license__ = "GPL version 2"
__email__ = "periodflow@users.noreply.github.com"
__revision__ = "$Format:%H$"

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ..testing.oracles import assignment_by_permutation
from ..tools.exceptions import (
    IdMismatch,
    InvalidGroundTruth,
    LengthMismatch,
    OutOfRange,
)
from ..tools.metrics import (
    Prediction,
    evaluate,
    hungarian,
    mae,
    mape,
    period_tiou,
    tiou_anomaly,
    tiou_interval,
    tiou_period,
)
from ..tools.model import GroundTruth, Interval, PeriodSegmentation


def periods(*bounds):
    return PeriodSegmentation(tuple(Interval(start, end) for start, end in bounds))


GT = periods((0, 10), (10, 20), (20, 30))


@pytest.mark.parametrize(
    "preds,gts,expected",
    [([5, 6], [5, 6], 0.0), ([4, 6], [5, 6], 0.1), ([10], [5], 1.0)],
)
def test_mape(preds, gts, expected):
    assert mape(preds, gts) == pytest.approx(expected)


def test_mape_errors():
    with pytest.raises(LengthMismatch):
        mape([3], [3, 4])
    with pytest.raises(InvalidGroundTruth):
        mape([2], [2])


@pytest.mark.parametrize(
    "a,b,expected",
    [
        (Interval(0, 10), Interval(0, 10), 1.0),
        (Interval(0, 10), Interval(5, 15), 1 / 3),
        (Interval(0, 5), Interval(7, 9), 0.0),
        (Interval(0, 5), Interval(5, 9), 0.0),
    ],
)
def test_tiou_interval(a, b, expected):
    assert tiou_interval(a, b) == pytest.approx(expected)
    assert tiou_interval(b, a) == pytest.approx(expected)


@settings(max_examples=100)
@given(
    st.integers(0, 50),
    st.integers(1, 20),
    st.integers(0, 50),
    st.integers(1, 20),
)
def test_tiou_interval_bounds(a_start, a_length, b_start, b_length):
    a = Interval(a_start, a_start + a_length)
    b = Interval(b_start, b_start + b_length)

    value = tiou_interval(a, b)

    assert 0.0 <= value <= 1.0
    assert (value == 1.0) == (a == b)


def test_hungarian_identity():
    matching = hungarian([[1, 0], [0, 1]])
    assert set(matching.pairs) == {(0, 0), (1, 1)}
    assert matching.total == 2.0


def test_hungarian_single_row():
    assert hungarian([[0.2, 0.9, 0.1]]).pairs == ((0, 1),)


def test_hungarian_matches_permutations():
    matrix = np.random.default_rng(5).uniform(size=(5, 5))
    assert hungarian(matrix).total == pytest.approx(assignment_by_permutation(matrix))


@settings(max_examples=50, deadline=None)
@given(
    st.integers(1, 5).flatmap(
        lambda rows: st.integers(1, 5).flatmap(
            lambda columns: st.lists(
                st.lists(st.floats(0, 1), min_size=columns, max_size=columns),
                min_size=rows,
                max_size=rows,
            )
        )
    )
)
def test_hungarian_is_optimal(matrix):
    assert hungarian(matrix).total == pytest.approx(assignment_by_permutation(matrix))


def test_hungarian_rejects_empty():
    with pytest.raises(OutOfRange):
        hungarian([[]])


def test_tiou_period_exact():
    assert tiou_period([GT, GT], [GT, GT]) == 1.0


def test_tiou_period_shifted():
    shifted = periods((5, 15), (15, 25), (25, 35))
    assert tiou_period([shifted], [GT]) == pytest.approx(1 / 3)


def test_tiou_period_missing_interval():
    assert period_tiou(periods((0, 10), (20, 30)), GT) == pytest.approx(2 / 3)


def test_tiou_period_surplus_predictions_do_not_count():
    pred = periods((0, 10), (10, 20), (20, 30), (30, 40))
    assert period_tiou(pred, GT) == 1.0


def test_tiou_period_empty_prediction():
    assert period_tiou(PeriodSegmentation(), GT) == 0.0


def test_tiou_period_ignores_order():
    pred = [Interval(0, 12), Interval(12, 19), Interval(19, 30)]
    forward = period_tiou(PeriodSegmentation(tuple(pred)), GT)

    matrix = [[tiou_interval(p, g) for g in GT.boundaries] for p in reversed(pred)]

    assert hungarian(matrix).total / GT.count == pytest.approx(forward)


def test_tiou_period_needs_three_gt_periods():
    with pytest.raises(InvalidGroundTruth):
        tiou_period([GT], [periods((0, 10), (10, 20))])


@pytest.mark.parametrize(
    "preds,gts,expected",
    [
        ([0.3, 0.7], [0.3, 0.7], 0.0),
        ([0.5], [0.25], 0.25),
        ([0.0, 1.0], [1.0, 0.0], 1.0),
    ],
)
def test_mae(preds, gts, expected):
    assert mae(preds, gts) == pytest.approx(expected)


def test_mae_out_of_range():
    with pytest.raises(OutOfRange):
        mae([1.2], [0.5])


def test_tiou_anomaly():
    gts = [Interval(10, 20), Interval(30, 40)]

    assert tiou_anomaly(gts, gts) == 1.0
    assert tiou_anomaly([None, None], gts) == 0.0
    assert tiou_anomaly([Interval(10, 20), Interval(0, 5)], gts) == 0.5
    with pytest.raises(LengthMismatch):
        tiou_anomaly([None], gts)


def _truths():
    return [
        GroundTruth(GT.boundaries, "A B C", length=30, id="p"),
        GroundTruth(
            GT.boundaries, "A B C", remaining_proportion=0.25, task="completion", id="c"
        ),
        GroundTruth(
            GT.boundaries, "A B C", anomaly=Interval(22, 26), task="anomaly", id="a"
        ),
    ]


def test_evaluate_perfect_predictions():
    preds = [
        Prediction("a", anomaly=Interval(22, 26)),
        Prediction("p", segmentation=GT),
        Prediction("c", remaining=0.25),
    ]

    report = evaluate(preds, _truths())

    assert report.aggregates() == {
        "mape": 0.0,
        "tiou_period": 1.0,
        "mae": 0.0,
        "tiou_anomaly": 1.0,
    }
    assert [score.id for score in report.per_sequence] == ["a", "c", "p"]


def test_evaluate_missing_predictions():
    preds = [Prediction("p"), Prediction("c"), Prediction("a")]

    report = evaluate(preds, _truths())

    assert report.mape == 1.0
    assert report.tiou_period == 0.0
    assert report.mae == 0.75
    assert report.tiou_anomaly == 0.0


def test_evaluate_only_period_sequences():
    report = evaluate([Prediction("p", segmentation=GT)], _truths()[:1])
    assert report.mae is None
    assert report.tiou_anomaly is None


def test_evaluate_id_mismatch():
    with pytest.raises(IdMismatch):
        evaluate([Prediction("x")], _truths()[:1])


def test_prediction_keeps_extra_fields():
    data = {
        "id": "p",
        "count": 3,
        "boundaries": [[0, 10], [10, 20], [20, 30]],
        "remaining": None,
        "anomaly": None,
        "workflow": "A B C",
    }

    prediction = Prediction.from_dict(data)

    assert prediction.segmentation == GT
    assert prediction.extra == {"workflow": "A B C"}
    assert prediction.to_dict() == data
