import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ..testing.oracles import dft_marginal, dtw_paths
from ..tools.config import Config
from ..tools.exceptions import (
    DegeneratePartition,
    EmptySegment,
    InvalidSetting,
    NoPeriodicity,
    SequenceTooShort,
)
from ..tools.model import HardTranscript, SoftTranscript
from ..tools.period_estimator import (
    MagnitudeSpectrum,
    WindowCandidates,
    dtw_distance,
    estimate_period_window,
    estimate_windows,
    marginal_spectrum,
    rerank_windows,
    top_windows,
    window_bounds,
    window_score,
)


def one_hot(tokens, K):  # noqa: N803
    return SoftTranscript(np.eye(K)[np.asarray(tokens)])


def random_soft(rng, T, K):  # noqa: N803
    rows = rng.random((T, K)) + 0.01
    return SoftTranscript(rows / rows.sum(axis=1, keepdims=True))


def test_constant_transcript_spectrum():
    st_ = SoftTranscript(np.tile([0.2, 0.3, 0.5], (8, 1)))

    mags = marginal_spectrum(st_).mags

    assert mags[0] > 0
    assert np.all(mags[1:] < 1e-9 * mags[0])


def test_cycling_transcript_spectrum():
    st_ = one_hot([t % 5 for t in range(20)], 5)

    mags = marginal_spectrum(st_).mags

    assert mags.tolist() == pytest.approx(dft_marginal(st_.rows), abs=1e-9)
    peaks = {v for v in range(1, 20) if mags[v] > 1.0}
    assert peaks == {4, 8, 12, 16}
    assert mags[4] == pytest.approx(20.0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_spectrum_matches_direct_sum(seed):
    rng = np.random.default_rng(seed)
    st_ = random_soft(rng, 16, 4)

    mags = marginal_spectrum(st_).mags
    expected = dft_marginal(st_.rows)

    assert mags.tolist() == pytest.approx(expected, rel=1e-9, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 32), st.integers(1, 6), st.integers(0, 2**16))
def test_spectrum_matches_direct_sum_property(T, K, seed):  # noqa: N803
    st_ = random_soft(np.random.default_rng(seed), T, K)

    mags = marginal_spectrum(st_).mags

    scale = max(mags.max(), 1.0)
    assert mags.tolist() == pytest.approx(dft_marginal(st_.rows), abs=1e-9 * scale)


def test_spectrum_needs_two_frames():
    with pytest.raises(SequenceTooShort):
        marginal_spectrum(SoftTranscript([[1.0, 0.0]]))


def test_top_windows_skips_dc_and_out_of_range():
    ms = MagnitudeSpectrum([9, 0, 5, 0, 7, 0, 3, 0])

    wc = top_windows(ms, 2, 4)

    assert wc.windows == (2, 4)
    assert wc.frequencies == (4, 2)


def test_top_windows_without_periodicity():
    with pytest.raises(NoPeriodicity):
        top_windows(MagnitudeSpectrum([5, 0, 0, 0, 0, 0]), 2, 3)


def test_top_windows_tie_prefers_lower_frequency():
    mags = np.zeros(30)
    mags[[3, 5]] = 1.0

    assert top_windows(MagnitudeSpectrum(mags), 2, 15).windows == (10, 6)


def test_top_windows_deduplicates_rounded_windows():
    mags = np.zeros(40)
    mags[[13, 14, 7]] = [3.0, 2.0, 1.0]

    wc = top_windows(MagnitudeSpectrum(mags), 2, 13)

    # 40/13 and 40/14 both round to 3
    assert wc.windows == (3, 6)
    assert wc.frequencies == (13, 7)


def test_top_windows_is_scale_invariant():
    rng = np.random.default_rng(5)
    mags = rng.random(24)

    assert (
        top_windows(MagnitudeSpectrum(mags), 2, 8).windows
        == top_windows(MagnitudeSpectrum(mags * 7.5), 2, 8).windows
    )


def test_top_windows_bounds():
    with pytest.raises(InvalidSetting):
        top_windows(MagnitudeSpectrum(np.ones(10)), 4, 4)


def test_dtw_identity_and_single_frames():
    a = [[0.0, 1.0], [2.0, 3.0], [4.0, 4.0]]

    assert dtw_distance(a, a) == 0
    assert dtw_distance([[0.0, 0.0]], [[3.0, 4.0]]) == pytest.approx(5.0)


@pytest.mark.parametrize("seed", range(5))
def test_dtw_matches_path_enumeration(seed):
    rng = np.random.default_rng(seed)
    a = rng.random((3, 4)).tolist()
    b = rng.random((3, 4)).tolist()

    assert dtw_distance(a, b) == pytest.approx(dtw_paths(a, b))


POINTS = st.lists(st.floats(-5, 5), min_size=2, max_size=2)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(POINTS, min_size=1, max_size=5),
    st.lists(POINTS, min_size=1, max_size=5),
)
def test_dtw_properties(a, b):
    distance = dtw_distance(a, b)

    assert distance >= 0
    assert distance == pytest.approx(dtw_distance(b, a))
    assert distance == pytest.approx(dtw_paths(a, b))


def test_dtw_band_restricts_paths():
    a = [[0.0], [1.0], [2.0], [3.0]]
    b = [[0.0], [0.0], [3.0], [3.0]]

    assert dtw_distance(a, b, band=0) >= dtw_distance(a, b)
    assert dtw_distance(a, b, band=0) == pytest.approx(2.0)


@pytest.mark.parametrize(
    "shape, band", [((4, 6), 1), ((6, 3), 0), ((5, 5), 2), ((2, 7), None)]
)
def test_dtw_unequal_lengths_and_bands(shape, band):
    rng = np.random.default_rng(sum(shape))
    a = rng.random((shape[0], 2)).tolist()
    b = rng.random((shape[1], 2)).tolist()
    width = None if band is None else max(band, abs(shape[0] - shape[1]))

    assert dtw_distance(a, b, band=band) == pytest.approx(dtw_paths(a, b, width))


def test_dtw_empty_segment():
    with pytest.raises(EmptySegment):
        dtw_distance([], [[1.0]])


def test_rerank_prefers_true_period():
    st_ = one_hot([t % 5 for t in range(40)], 5)

    wc = rerank_windows(st_, WindowCandidates((8, 5)))

    assert wc.windows == (5, 8)
    assert wc.scores[0] == 0
    assert wc.scores[1] > 0


def test_rerank_single_candidate():
    st_ = one_hot([t % 5 for t in range(40)], 5)
    wc = WindowCandidates((8,), (5,))

    assert rerank_windows(st_, wc) is wc


def test_rerank_degenerate_partition():
    st_ = one_hot([t % 2 for t in range(10)], 2)

    with pytest.raises(DegeneratePartition):
        rerank_windows(st_, WindowCandidates((8, 9)))


def test_partial_segment_is_kept_from_half_window():
    rows = np.eye(2)[[t % 2 for t in range(12)]]

    assert window_score(rows, 8) is not None
    assert window_score(rows, 9) is None


def block_pattern(period_blocks, block, repeats, K):  # noqa: N803
    frames = block * period_blocks * repeats
    tokens = [(t // block) % period_blocks for t in range(frames)]
    return one_hot(tokens, K), HardTranscript(tokens, K)


def test_estimate_exact_period():
    st_, _ = block_pattern(5, 5, 4, 5)

    assert estimate_period_window(st_, Config()) == 25
    assert estimate_period_window(st_, Config(rerank=False)) == 25


def test_estimate_with_hard_tokens():
    st_, ht = block_pattern(5, 5, 4, 5)

    assert estimate_period_window(st_, Config(window_token="hard"), ht) == 25


def test_estimate_candidates_are_ranked():
    st_, _ = block_pattern(5, 5, 4, 5)

    wc = estimate_windows(st_, Config())

    assert wc.windows[0] == 25
    assert set(wc.windows) == {25, 13, 8}
    assert list(wc.scores) == sorted(wc.scores)


def test_estimate_constant_transcript():
    st_ = SoftTranscript(np.tile([0.5, 0.5], (30, 1)))

    with pytest.raises(NoPeriodicity):
        estimate_period_window(st_, Config())


def test_estimate_jittered_period():
    rng = np.random.default_rng(7)
    tokens = []
    for _ in range(8):
        shifts = rng.integers(-2, 3, size=2)
        durations = [5 + shifts[0], 5 - shifts[0], 5 + shifts[1], 5 - shifts[1]]
        for token, duration in enumerate(durations):
            tokens.extend([token] * int(duration))

    w = estimate_period_window(one_hot(tokens, 4), Config())

    assert 18 <= w <= 22


def test_window_bounds():
    assert window_bounds(30, Config()) == (2, 10)
    assert window_bounds(30, Config(max_window=40)) == (2, 30)
    with pytest.raises(SequenceTooShort):
        window_bounds(5, Config())
