import time

import numpy as np
import pytest

from crossview import matching
from crossview.errors import ShapeMismatch


def oracle_scores(fa, fg):
    """Straight transcription of the correlation sum: for every shift i,
    accumulate channel-major, then rows, then ground columns."""
    h_n, w_a, c_n = fa.shape
    w_g = fg.shape[1]
    scores = np.zeros(w_a)
    for i in range(w_a):
        acc = 0.0
        for c in range(c_n):
            for h in range(h_n):
                for w in range(w_g):
                    acc += fa[h, (i + w) % w_a, c] * fg[h, w, c]
        scores[i] = acc
    return scores


def _random_pair(rng, w_a=None, w_g=None, h=None, c=None):
    w_a = w_a or int(rng.integers(1, 17))
    w_g = w_g or int(rng.integers(1, w_a + 1))
    h = h or int(rng.integers(1, 5))
    c = c or int(rng.integers(1, 5))
    fa = rng.standard_normal((h, w_a, c))
    fg = rng.standard_normal((h, w_g, c))
    return fa, fg


# --- exact path ---------------------------------------------------------------

def test_all_zero_ground_volume_scores_zero():
    rng = np.random.default_rng(0)
    fa = rng.standard_normal((2, 6, 3))
    fg = np.zeros((2, 3, 3))
    assert np.array_equal(matching.cyclic_correlation(fa, fg), np.zeros(6))


def test_one_hot_shift_detector():
    fa = np.zeros((1, 4, 1))
    fa[0, 2, 0] = 1.0
    fg = np.ones((1, 1, 1))
    assert np.array_equal(matching.cyclic_correlation(fa, fg), [0.0, 0.0, 1.0, 0.0])


def test_exact_path_matches_triple_loop_oracle_bitwise():
    rng = np.random.default_rng(42)
    fa, fg = _random_pair(rng, w_a=6, w_g=3, h=2, c=2)
    assert np.array_equal(matching.cyclic_correlation(fa, fg), oracle_scores(fa, fg))


def test_exact_path_bitwise_on_many_random_shapes():
    rng = np.random.default_rng(7)
    for _ in range(100):
        fa, fg = _random_pair(rng)
        got = matching.cyclic_correlation(fa, fg)
        assert np.array_equal(got, oracle_scores(fa, fg))


def test_shift_equivariance_is_exact():
    rng = np.random.default_rng(9)
    fa, fg = _random_pair(rng, w_a=8, w_g=5, h=2, c=3)
    base = matching.cyclic_correlation(fa, fg)
    for k in range(1, 8):
        rolled = np.roll(fa, -k, axis=1)  # column w of rolled is column w+k of fa
        got = matching.cyclic_correlation(rolled, fg)
        assert np.array_equal(got, np.roll(base, -k))


def test_self_correlation_dominates_at_shift_zero():
    rng = np.random.default_rng(13)
    for _ in range(20):
        fa = rng.standard_normal((3, 10, 2))
        scores = matching.cyclic_correlation(fa, fa)
        assert scores[0] >= scores.max() - 1e-12


def test_shape_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ShapeMismatch):
        matching.cyclic_correlation(rng.random((2, 4, 3)), rng.random((3, 4, 3)))
    with pytest.raises(ShapeMismatch):
        matching.cyclic_correlation(rng.random((2, 4, 3)), rng.random((2, 5, 3)))


# --- fft path -----------------------------------------------------------------

def test_fft_agrees_with_exact_on_1000_random_cases():
    rng = np.random.default_rng(100)
    worst = 0.0
    for _ in range(1000):
        fa, fg = _random_pair(rng)
        naive = matching.cyclic_correlation(fa, fg)
        fast = matching.fft_correlation(fa, fg)
        worst = max(worst, float(np.abs(naive - fast).max()))
    assert worst < 1e-6


def test_fft_one_hot_within_1e9():
    fa = np.zeros((1, 4, 1))
    fa[0, 2, 0] = 1.0
    fg = np.ones((1, 1, 1))
    assert np.abs(matching.fft_correlation(fa, fg) - np.array([0, 0, 1, 0])).max() < 1e-9


def test_fft_timing_report():
    """Benchmark contract: report naive vs fft timing, no pass/fail."""
    rng = np.random.default_rng(5)
    fa = rng.standard_normal((4, 64, 16))
    fg = rng.standard_normal((4, 16, 16))
    matching.cyclic_correlation(fa, fg)  # warm any compilation
    t0 = time.perf_counter()
    for _ in range(20):
        matching.cyclic_correlation(fa, fg)
    t_naive = (time.perf_counter() - t0) / 20
    t0 = time.perf_counter()
    for _ in range(20):
        matching.fft_correlation(fa, fg)
    t_fft = (time.perf_counter() - t0) / 20
    print(f"\ncorrelation W_a=64 W_g=16 H=4 C=16: naive {t_naive*1e6:.1f}us, fft {t_fft*1e6:.1f}us")


# --- orientation and cropping ---------------------------------------------------

def test_estimate_orientation_examples():
    assert matching.estimate_orientation(np.array([0.0, 0.0, 1.0, 0.0])) == 2
    assert matching.estimate_orientation(np.array([1.0, 1.0, 1.0, 1.0])) == 0
    scores = np.array([0.3, 0.9, 0.1])
    assert matching.estimate_orientation(scores) == matching.estimate_orientation(7.5 * scores)


def test_crop_at_identity_and_wrap():
    rng = np.random.default_rng(3)
    fa = rng.standard_normal((2, 4, 3))
    assert np.array_equal(matching.crop_at(fa, 0, 4), fa)
    wrapped = matching.crop_at(fa, 3, 2)
    assert np.array_equal(wrapped[:, 0], fa[:, 3])
    assert np.array_equal(wrapped[:, 1], fa[:, 0])


def test_crop_dot_product_equals_correlation_score():
    rng = np.random.default_rng(17)
    fa, fg = _random_pair(rng, w_a=7, w_g=4, h=3, c=2)
    scores = matching.cyclic_correlation(fa, fg)
    for i in range(7):
        dot = float(np.sum(matching.crop_at(fa, i, 4) * fg))
        assert abs(dot - scores[i]) < 1e-12


def test_crop_validation():
    rng = np.random.default_rng(0)
    fa = rng.random((2, 4, 1))
    with pytest.raises(ShapeMismatch):
        matching.crop_at(fa, 0, 5)
    with pytest.raises(ShapeMismatch):
        matching.crop_at(fa, 4, 2)


# --- match_pair -----------------------------------------------------------------

def test_match_pair_recovers_exact_crop():
    rng = np.random.default_rng(23)
    fa = rng.standard_normal((2, 8, 3))
    fa /= np.sqrt(np.sum(fa * fa))
    for k in (0, 3, 5):
        fg = matching.crop_at(fa, k, 8)  # full-width crop: a pure rotation
        result = matching.match_pair(fa, fg)
        assert result.orientation == k
        assert result.distance == 0.0


def test_match_pair_narrow_crop_distance_zero():
    rng = np.random.default_rng(29)
    fa = rng.standard_normal((3, 12, 2))
    fg = matching.crop_at(fa, 7, 5)
    result = matching.match_pair(fa, fg)
    assert result.orientation == 7
    assert result.distance == 0.0


def test_match_pair_distance_positive_for_non_crop():
    rng = np.random.default_rng(31)
    fa = rng.standard_normal((2, 6, 2))
    fg = rng.standard_normal((2, 3, 2))
    result = matching.match_pair(fa, fg)
    assert result.distance > 0.0
    assert result.score == pytest.approx(
        float(np.sum(matching.crop_at(fa, result.orientation, 3) * fg)), abs=1e-9
    )


def test_pairwise_matches_agree_with_match_pair():
    rng = np.random.default_rng(37)
    ground = [rng.standard_normal((2, 4, 3)) for _ in range(3)]
    aerial = [rng.standard_normal((2, 6, 3)) for _ in range(3)]
    orientations, distances, scores = matching.pairwise_matches(ground, aerial)
    for i in range(3):
        for j in range(3):
            single = matching.match_pair(aerial[j], ground[i])
            assert orientations[i, j] == single.orientation
            assert distances[i, j] == pytest.approx(single.distance, abs=1e-12)
            assert scores[i, j] == pytest.approx(single.score, abs=1e-12)
