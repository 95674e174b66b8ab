import json
import math

import numpy as np
import pytest
import scipy.stats

from wmfrontier.analysis import (
    Point2D,
    TanhCurve,
    TruncatedLinear,
    fit_tanh_curve,
    fit_truncated_linear,
    fractional_ranks,
    identity_map,
    pearson,
    perpendicular_residuals,
    spearman,
    transfer_curve,
    whiten,
)
from wmfrontier.errors import DomainError


def pts(xs, ys):
    return [Point2D(float(x), float(y)) for x, y in zip(xs, ys)]


class TestCorrelation:
    def test_pearson_matches_scipy(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            x = rng.normal(size=30)
            y = rng.normal(size=30) + 0.4 * x
            ref = scipy.stats.pearsonr(x, y).statistic
            assert pearson(x, y) == pytest.approx(ref, abs=1e-12)

    def test_pearson_affine_invariance(self):
        rng = np.random.default_rng(1)
        x, y = rng.normal(size=25), rng.normal(size=25)
        assert pearson(3 * x + 7, -2 * y + 1) == pytest.approx(-pearson(x, y))

    def test_pearson_perfect_line(self):
        x = np.arange(10.0)
        assert pearson(x, 2 * x + 3) == pytest.approx(1.0)

    def test_pearson_zero_variance(self):
        with pytest.raises(DomainError):
            pearson([1, 1, 1], [1, 2, 3])

    def test_fractional_ranks_with_ties(self):
        ref = scipy.stats.rankdata([3.0, 1.0, 3.0, 2.0, 3.0])
        assert fractional_ranks([3.0, 1.0, 3.0, 2.0, 3.0]) == pytest.approx(ref)

    def test_spearman_matches_scipy(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            x = rng.integers(0, 6, size=40).astype(float)  # forces ties
            y = rng.integers(0, 6, size=40).astype(float)
            ref = scipy.stats.spearmanr(x, y).statistic
            assert spearman(x, y) == pytest.approx(ref, abs=1e-12)

    def test_spearman_monotone_invariance(self):
        rng = np.random.default_rng(3)
        x, y = rng.normal(size=30), rng.normal(size=30)
        assert spearman(np.exp(x), y**3) == pytest.approx(spearman(x, y), abs=1e-12)


class TestWhiten:
    def test_round_trip(self):
        rng = np.random.default_rng(4)
        points = pts(rng.normal(3, 5, 40), rng.normal(-2, 0.1, 40))
        whitened, tf = whiten(points)
        back = tf.invert(np.array([[p.x, p.y] for p in whitened]))
        for orig, rec in zip(points, back):
            assert rec[0] == pytest.approx(orig.x, abs=1e-12)
            assert rec[1] == pytest.approx(orig.y, abs=1e-12)

    def test_unit_moments(self):
        rng = np.random.default_rng(5)
        points = pts(rng.normal(10, 2, 50), rng.normal(0, 7, 50))
        whitened, _ = whiten(points)
        xs = np.array([p.x for p in whitened])
        ys = np.array([p.y for p in whitened])
        assert np.mean(xs) == pytest.approx(0.0, abs=1e-12)
        assert np.std(xs) == pytest.approx(1.0, abs=1e-12)
        assert np.std(ys) == pytest.approx(1.0, abs=1e-12)

    def test_degenerate_axis_rejected(self):
        with pytest.raises(DomainError):
            whiten(pts([1, 1, 1], [1, 2, 3]))


def tanh_points(a, b, c, d, xs):
    return pts(xs, [d + a * math.tanh(b * (x - c)) for x in xs])


class TestTanhFit:
    def test_recovers_exact_synthetic_curve(self):
        xs = np.linspace(0.0, 1.0, 25)
        curve = fit_tanh_curve(tanh_points(0.3, 8.0, 0.55, 0.6, xs))
        assert curve.converged
        assert curve.residual < 1e-6
        for x in np.linspace(0.05, 0.95, 17):
            assert curve(x) == pytest.approx(0.6 + 0.3 * math.tanh(8 * (x - 0.55)),
                                             abs=1e-5)

    def test_outlier_contributes_its_distance(self):
        # with an L1 perpendicular objective, one off-curve point adds exactly
        # dist/n to the mean residual, measured in the whitened frame
        xs = np.linspace(0.0, 1.0, 24)
        points = tanh_points(0.25, 6.0, 0.5, 0.5, xs)
        clean = fit_tanh_curve(points)
        bad = points + [Point2D(0.5, 0.9)]
        curve = fit_tanh_curve(bad)
        dists = perpendicular_residuals(bad, curve)
        assert curve.residual == pytest.approx(float(np.mean(dists)), abs=1e-9)
        assert max(dists[:-1]) < 1e-4
        assert curve.residual > clean.residual

    def test_flat_points_fit_with_tiny_residual(self):
        points = pts(np.linspace(0, 1, 12), [0.5] * 12)
        curve = fit_tanh_curve(points)
        assert curve.residual < 1e-6
        assert curve(0.3) == pytest.approx(0.5, abs=1e-6)

    def test_too_few_points(self):
        with pytest.raises(DomainError):
            fit_tanh_curve(pts([0, 1, 2], [0, 1, 2]))

    def test_serialization_round_trip(self):
        xs = np.linspace(0, 1, 20)
        curve = fit_tanh_curve(tanh_points(0.2, 5.0, 0.4, 0.55, xs))
        loaded = TanhCurve.from_json(json.loads(json.dumps(curve.to_json())))
        for x in np.linspace(0, 1, 9):
            assert loaded(x) == pytest.approx(curve(x), abs=1e-12)


class TestTruncatedLinear:
    def test_recovers_exact_hinge(self):
        xs = np.linspace(0.0, 1.0, 21)
        ys = [min(0.5, x) for x in xs]
        fit = fit_truncated_linear(xs, ys)
        assert fit.slope == pytest.approx(1.0, abs=1e-9)
        assert fit.intercept == pytest.approx(0.0, abs=1e-9)
        assert fit.cap == pytest.approx(0.5, abs=1e-9)

    def test_never_worse_than_plain_ols(self):
        rng = np.random.default_rng(6)
        for _ in range(25):
            xs = rng.random(15)
            ys = rng.random(15)
            fit = fit_truncated_linear(xs, ys)
            slope, intercept = np.polyfit(xs, ys, 1)
            ols_sse = float(np.sum((np.polyval([slope, intercept], xs) - ys) ** 2))
            fit_sse = float(np.sum((np.array([fit(x) for x in xs]) - ys) ** 2))
            assert fit_sse <= ols_sse + 1e-9

    def test_pure_line_reduces_to_ols(self):
        xs = np.linspace(0, 1, 10)
        ys = 0.4 * xs + 0.1
        fit = fit_truncated_linear(xs, ys)
        for x in xs:
            assert fit(x) == pytest.approx(0.4 * x + 0.1, abs=1e-9)

    def test_too_few_points(self):
        with pytest.raises(DomainError):
            fit_truncated_linear([0, 1], [0, 1])

    def test_serialization_round_trip(self):
        fit = TruncatedLinear(slope=0.7, intercept=0.05, cap=0.6)
        loaded = TruncatedLinear.from_json(json.loads(json.dumps(fit.to_json())))
        assert loaded(0.5) == fit(0.5)
        assert loaded(0.95) == fit(0.95) == 0.6


class TestTransfer:
    def test_identity_maps_reproduce_base(self):
        xs = np.linspace(0, 1, 20)
        base = fit_tanh_curve(tanh_points(0.3, 7.0, 0.5, 0.55, xs))
        moved = transfer_curve(base, identity_map(), identity_map())
        for p in moved:
            assert p.y == pytest.approx(base(p.x), abs=1e-12)

    def test_synthetic_two_model_transfer(self):
        # model B's frontier is an axis-wise affine distortion of model A's;
        # fitting the axis maps from paired observations and pushing A's fitted
        # curve through them should land on B's true frontier
        a, b, c, d = 0.3, 8.0, 0.5, 0.55

        def qa(x):
            return d + a * math.tanh(b * (x - c))

        def fx(x):   # detection-axis map A -> B
            return min(0.95, 0.9 * x + 0.05)

        def fy(y):   # quality-axis map A -> B
            return 0.8 * y + 0.1

        xs_a = np.linspace(0.02, 0.98, 30)
        base = fit_tanh_curve(pts(xs_a, [qa(x) for x in xs_a]))
        detect_map = fit_truncated_linear(xs_a, [fx(x) for x in xs_a])
        quality_map = fit_truncated_linear([qa(x) for x in xs_a],
                                           [fy(qa(x)) for x in xs_a])

        moved = transfer_curve(base, quality_map, detect_map,
                               x_range=(0.05, 0.95))
        for p in moved:
            # invert the detection map to find A's operating point
            xa = (p.x - 0.05) / 0.9
            assert p.y == pytest.approx(fy(qa(xa)), abs=1e-3)

    def test_clipping_to_unit_interval(self):
        base = TanhCurve(a=5.0, b=1.0, c=0.5, d=0.5)
        moved = transfer_curve(base, identity_map(), identity_map())
        assert all(0.0 <= p.y <= 1.0 for p in moved)
