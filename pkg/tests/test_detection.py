import numpy as np
import pytest

from wmfrontier.detection import (
    ABOVE_MAX_SCORE,
    ScoredSample,
    best_threshold,
    confusion_at,
    f_beta,
)
from wmfrontier.errors import DomainError


def samples_from(wm_scores, base_scores):
    return [ScoredSample(s, True) for s in wm_scores] + [
        ScoredSample(s, False) for s in base_scores
    ]


def brute_force_best(samples, beta):
    """Independent oracle: evaluate confusion_at on every candidate."""
    candidates = sorted(set(s.score for s in samples)) + [ABOVE_MAX_SCORE]
    best = None
    for t in candidates:
        rep = confusion_at(samples, t, beta)
        if best is None or rep.f_beta > best.f_beta or (
            rep.f_beta == best.f_beta and t > best.threshold
        ):
            best = rep
    return best


class TestFBeta:
    def test_perfect(self):
        assert f_beta(1.0, 1.0, 0.5) == 1.0

    def test_equal_p_r_is_identity(self):
        for x in (0.0, 0.3, 0.7, 1.0):
            for beta in (0.5, 1.0, 2.0):
                assert f_beta(x, x, beta) == pytest.approx(x)

    def test_direct_arithmetic(self):
        # (1.25 * 0.8 * 0.4) / (0.25 * 0.8 + 0.4)
        assert f_beta(0.8, 0.4, 0.5) == pytest.approx(0.4 / 0.6)

    def test_zero_when_both_zero(self):
        assert f_beta(0.0, 0.0, 0.5) == 0.0

    def test_beta_half_weights_precision(self):
        assert f_beta(0.9, 0.5, 0.5) > f_beta(0.5, 0.9, 0.5)

    def test_bad_beta(self):
        with pytest.raises(DomainError):
            f_beta(0.5, 0.5, 0.0)


class TestConfusionAt:
    def test_threshold_zero_flags_everything(self):
        s = samples_from([0.6, 0.7], [0.2, 0.3])
        rep = confusion_at(s, 0.0)
        assert rep.recall == 1.0

    def test_threshold_above_one_flags_nothing(self):
        s = samples_from([0.6, 0.7], [0.2, 0.3])
        rep = confusion_at(s, 1.5)
        assert rep.recall == 0.0 and rep.precision == 0.0

    def test_hand_enumeration(self):
        s = samples_from([0.9, 0.6, 0.4], [0.5, 0.3, 0.1])
        rep = confusion_at(s, 0.5)
        assert rep.counts == (2, 1, 2, 1)
        assert rep.precision == pytest.approx(2 / 3)
        assert rep.recall == pytest.approx(2 / 3)

    def test_counts_sum_to_sample_count(self):
        rng = np.random.default_rng(0)
        s = samples_from(rng.random(20), rng.random(20))
        rep = confusion_at(s, 0.5)
        assert sum(rep.counts) == 40

    def test_single_class_rejected(self):
        with pytest.raises(DomainError):
            confusion_at([ScoredSample(0.5, True)], 0.5)


class TestBestThreshold:
    def test_perfect_separation(self):
        s = samples_from([0.8, 0.9], [0.1, 0.2])
        assert best_threshold(s).f_beta == 1.0

    def test_identical_distributions(self):
        scores = [0.2, 0.4, 0.6]
        s = samples_from(scores, scores)
        rep = best_threshold(s)
        oracle = brute_force_best(s, 0.5)
        assert rep.f_beta == oracle.f_beta

    def test_matches_brute_force_on_random_sets(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            n = int(rng.integers(2, 20))
            m = int(rng.integers(2, 20))
            # quantized scores force ties across classes
            s = samples_from(
                np.round(rng.random(n), 1), np.round(rng.random(m), 1)
            )
            rep = best_threshold(s)
            oracle = brute_force_best(s, 0.5)
            assert rep.f_beta == oracle.f_beta
            assert rep.threshold == oracle.threshold

    def test_dominates_every_candidate(self):
        rng = np.random.default_rng(7)
        s = samples_from(rng.random(10), rng.random(10))
        rep = best_threshold(s)
        for t in sorted(set(x.score for x in s)) + [ABOVE_MAX_SCORE]:
            assert rep.f_beta >= confusion_at(s, t).f_beta

    def test_monotone_transform_invariance(self):
        # any strictly increasing rescaling of scores leaves the best F-score
        # unchanged (only the threshold value moves)
        rng = np.random.default_rng(13)
        for _ in range(20):
            wm = rng.random(8)
            base = rng.random(8)
            direct = best_threshold(samples_from(wm, base))
            squashed = best_threshold(samples_from(wm**2, base**2))
            assert direct.f_beta == pytest.approx(squashed.f_beta, abs=1e-12)

    def test_report_serializes(self):
        rep = best_threshold(samples_from([0.9], [0.1]))
        obj = rep.to_json()
        assert obj["counts"]["tp"] == 1 and obj["f_beta"] == 1.0
