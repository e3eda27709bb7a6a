from types import SimpleNamespace

import numpy as np
import pytest

from iad.exceptions import UndefinedMetricError
from iad.metrics import (
    auc,
    count_modes,
    otsu_separability,
    pgr,
    weight_kde,
    weight_trajectory,
)


def auc_oracle(scores, labels):
    """Exhaustive pairwise comparison: P(anomaly > normal) + 0.5 P(equal)."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    total = 0.0
    for a in pos:
        for b in neg:
            if a > b:
                total += 1.0
            elif a == b:
                total += 0.5
    return total / (pos.size * neg.size)


class TestAuc:
    def test_perfect_separation(self):
        assert auc([1.0, 2.0, 9.0, 8.0], [0, 0, 1, 1]) == 1.0

    def test_all_equal_scores_give_half(self):
        assert auc([3.0, 3.0, 3.0, 3.0], [0, 1, 0, 1]) == 0.5

    def test_matches_pairwise_oracle_with_ties(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            n = int(rng.integers(4, 40))
            # coarse grid scores force plenty of ties
            s = rng.integers(0, 6, size=n).astype(float)
            y = rng.integers(0, 2, size=n)
            if y.min() == y.max():
                y[0] = 1 - y[0]
            assert abs(auc(s, y) - auc_oracle(s, y)) < 1e-12

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(2)
        s = rng.normal(size=50)
        y = rng.integers(0, 2, size=50)
        y[0], y[1] = 0, 1
        assert abs(auc(s, y) - auc(np.exp(s), y)) < 1e-12

    def test_complement_identity_without_ties(self):
        rng = np.random.default_rng(8)
        s = rng.permutation(30).astype(float)
        y = rng.integers(0, 2, size=30)
        y[0], y[1] = 0, 1
        assert abs(auc(s, y) + auc(-s, y) - 1.0) < 1e-12

    def test_single_class_is_undefined(self):
        with pytest.raises(UndefinedMetricError):
            auc([1.0, 2.0], [0, 0])


class TestPgr:
    def test_selected_equals_best(self):
        assert pgr(0.7, 0.85, 0.85) == 100.0

    def test_selected_equals_base(self):
        assert pgr(0.7, 0.7, 0.85) == 0.0

    def test_direct_formula(self):
        assert abs(pgr(0.70, 0.80, 0.85) - 66.66666666666667) < 1e-12

    def test_zero_denominator_raises(self):
        with pytest.raises(UndefinedMetricError):
            pgr(0.8, 0.9, 0.8)

    def test_affine_invariance(self):
        base, sel, best = 0.6, 0.72, 0.8
        ref = pgr(base, sel, best)
        a, b = 3.5, -0.2
        assert abs(pgr(a * base + b, a * sel + b, a * best + b) - ref) < 1e-9


class TestWeightTrajectory:
    def test_round_zero_reports_ones(self):
        history = [SimpleNamespace(t=0, weights_used=np.ones(6))]
        labels = [0, 0, 0, 0, 1, 1]
        traj = weight_trajectory(history, labels)
        assert traj["mean_normal"][0] == 1.0
        assert traj["mean_anomaly"][0] == 1.0

    def test_separated_scores_separate_classes(self):
        from iad.reweight import update_weights

        scores = np.concatenate([np.linspace(0, 1, 50), np.linspace(9, 10, 50)])
        labels = np.concatenate([np.zeros(50, int), np.ones(50, int)])
        w = update_weights(scores, tau=0.25)
        history = [SimpleNamespace(t=1, weights_used=w)]
        traj = weight_trajectory(history, labels)
        assert traj["mean_normal"][0] >= 0.9
        assert traj["mean_anomaly"][0] <= 0.1

    def test_balanced_identical_scores_are_symmetric(self):
        w = np.full(10, 0.5)
        history = [SimpleNamespace(t=1, weights_used=w)]
        labels = [0, 1] * 5
        traj = weight_trajectory(history, labels)
        assert traj["mean_normal"][0] == traj["mean_anomaly"][0]


class TestWeightKde:
    def test_all_equal_weights_report_spike(self):
        res = weight_kde(np.full(20, 0.5))
        assert res.is_spike and res.spike_at == 0.5 and res.density is None

    def test_two_tight_clusters_are_bimodal_near_centres(self):
        rng = np.random.default_rng(4)
        w = np.concatenate(
            [rng.normal(0.1, 0.01, 100), rng.normal(0.9, 0.01, 100)]
        ).clip(0.0, 1.0)
        res = weight_kde(w)
        assert count_modes(res.density) == 2
        peaks = res.grid[np.argsort(res.density)[-2:]]
        assert min(abs(peaks - 0.1)) < 0.05
        assert min(abs(peaks - 0.9)) < 0.05

    def test_density_integrates_to_one_on_padded_support(self):
        rng = np.random.default_rng(6)
        w = rng.uniform(0.2, 0.8, size=300)
        bw = weight_kde(w).bandwidth
        grid = np.linspace(w.min() - 6 * bw, w.max() + 6 * bw, 2000)
        res = weight_kde(w, grid=grid)
        integral = np.trapezoid(res.density, grid)
        assert abs(integral - 1.0) < 1e-2


class TestOtsuSeparability:
    def test_two_separated_point_clusters_approach_one(self):
        s = np.concatenate([np.zeros(50), np.ones(50)])
        assert otsu_separability(s) > 0.999

    def test_uniform_scores_are_weakly_separable(self):
        s = np.linspace(0.0, 1.0, 1024)
        val = otsu_separability(s)
        assert 0.5 < val < 0.8

    def test_affine_invariance(self):
        rng = np.random.default_rng(12)
        s = rng.normal(size=500)
        assert abs(otsu_separability(s) - otsu_separability(5.0 * s - 3.0)) < 1e-12

    def test_constant_scores_return_zero(self):
        assert otsu_separability(np.full(10, 2.0)) == 0.0

    def test_bounded_by_one(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            s = rng.normal(size=int(rng.integers(2, 200)))
            assert 0.0 <= otsu_separability(s) <= 1.0 + 1e-12
