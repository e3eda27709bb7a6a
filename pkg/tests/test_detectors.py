import numpy as np
import pytest

from iad.detectors import (
    Autoencoder,
    DeepSVDD,
    MaskedAutoregressiveFlow,
    default_hidden_dims,
    load_checkpoint,
    make_detector,
    save_checkpoint,
)
from iad.detectors.svdd import clamp_center
from iad.exceptions import ConfigurationError, TrainingAbortError
from iad.gradcheck import grad_check
from iad.nn import Dense, IDENTITY
from iad.rng import RngStream


def leaky(x, slope=0.01):
    return np.where(x > 0.0, x, slope * x)


def quantile_oracle(values, q):
    """Sort + linear interpolation, written independently of numpy.quantile."""
    s = np.sort(np.asarray(values, dtype=float))
    pos = q * (s.size - 1)
    lo = int(np.floor(pos))
    hi = min(lo + 1, s.size - 1)
    frac = pos - lo
    return s[lo] * (1.0 - frac) + s[hi] * frac


class TestDefaultDims:
    def test_ladder_matches_input_width(self):
        assert default_hidden_dims(6) == (32, 16, 4)
        assert default_hidden_dims(36) == (32, 16, 8)
        assert default_hidden_dims(21) == (32, 16, 8)
        assert default_hidden_dims(274) == (128, 64, 32)


class TestDeepSVDD:
    def test_sample_at_center_scores_zero(self):
        det = DeepSVDD(hidden=(3,), seed=0)
        rng = RngStream(0, 0).generator()
        X = rng.standard_normal((5, 3))
        det.reset(rng)
        det.score_all(X)  # builds network and centre
        feats = det._layers[0].forward(X)
        det.center_ = feats[2].copy()
        assert det.score_all(X)[2] == 0.0

    def test_identity_network_squared_norm(self):
        det = DeepSVDD(hidden=(2,), seed=0).reset()
        det.score_all(np.zeros((2, 2)))
        det._layers = [Dense(np.eye(2), activation=IDENTITY)]
        det.center_ = np.zeros(2)
        assert det.score_all(np.array([[3.0, 4.0]]))[0] == 25.0

    def test_scores_match_independent_forward_pass(self):
        det = DeepSVDD(hidden=(8, 4), seed=3)
        rng = RngStream(3, 1).generator()
        X = rng.standard_normal((20, 6))
        det.reset(RngStream(3, 0))
        got = det.score_all(X)
        h = leaky(X @ det._layers[0].weight.T)
        feats = h @ det._layers[1].weight.T
        expected = np.sum((feats - det.center_) ** 2, axis=1)
        np.testing.assert_allclose(got, expected, rtol=1e-12)

    def test_one_class_loss_equals_score(self):
        det = DeepSVDD(hidden=(4,), mode="one-class", seed=1).reset()
        X = RngStream(1, 1).generator().standard_normal((10, 3))
        np.testing.assert_array_equal(det.per_sample_loss(X), det.score_all(X))

    def test_soft_boundary_loss_values(self):
        det = DeepSVDD(hidden=(2,), mode="soft-boundary", nu=0.1, seed=0).reset()
        det.score_all(np.zeros((2, 2)))
        det._layers = [Dense(np.eye(2), activation=IDENTITY)]
        det.center_ = np.zeros(2)
        det.radius_sq_ = 1.0
        # f = 2 at x = (1,1): loss = nu*R^2 + (f - R^2) = 0.1 + 1
        loss = det.per_sample_loss(np.array([[1.0, 1.0]]))[0]
        assert abs(loss - 1.1) < 1e-15
        # at the boundary f = R^2 the hinge vanishes
        on_boundary = det.per_sample_loss(np.array([[1.0, 0.0]]))[0]
        assert abs(on_boundary - 0.1) < 1e-15

    def test_radius_update_quantile(self):
        det = DeepSVDD(mode="soft-boundary", nu=0.2, seed=0).reset()
        scores = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        assert det.update_radius(scores) == pytest.approx(
            quantile_oracle(scores, 0.8)
        )
        assert det.radius_sq_ == pytest.approx(4.2)
        det.nu = 1.0
        assert det.update_radius(scores) == 1.0
        det.nu = 1e-9
        assert det.update_radius(scores) == pytest.approx(5.0, abs=1e-6)

    def test_radius_refresh_schedule(self):
        det = DeepSVDD(hidden=(4, 2), mode="soft-boundary", nu=0.3,
                       radius_warmup=10, radius_interval=5, seed=1)
        det.reset(RngStream(1, 0))
        X = RngStream(1, 1).generator().standard_normal((100, 3))
        radii = []
        for _ in range(20):
            det.train_epoch(X)
            radii.append(det.radius_sq_)
        # pure hinge (radius 0) through warm-up, refreshed at 10/15/20
        assert all(r == 0.0 for r in radii[:9])
        assert radii[9] > 0.0
        assert radii[9] == radii[10] == radii[13]  # held between refreshes
        assert radii[14] != radii[13]
        assert radii[19] != radii[14]

    def test_radius_update_empty_scores_raises(self):
        det = DeepSVDD(mode="soft-boundary", nu=0.5).reset()
        with pytest.raises(ValueError):
            det.update_radius([])

    def test_invalid_nu_raises(self):
        det = DeepSVDD(mode="soft-boundary", nu=1.5).reset()
        with pytest.raises(ConfigurationError):
            det.score_all(np.zeros((2, 2)))

    def test_center_clamp(self):
        c = clamp_center(np.array([0.02, -0.03, 0.5, 0.0]))
        np.testing.assert_array_equal(c, [0.1, -0.1, 0.5, 0.1])

    def test_center_is_clamped_feature_mean(self):
        det = DeepSVDD(hidden=(2,), seed=0).reset()
        det.score_all(np.zeros((2, 2)))
        det._layers = [Dense(np.eye(2), activation=IDENTITY)]
        X = np.array([[0.5, -0.5], [1.5, -1.5]])
        det.center_ = clamp_center(det._layers[0].forward(X).mean(axis=0))
        np.testing.assert_array_equal(det.center_, [1.0, -1.0])

    def test_networks_are_bias_free(self):
        det = DeepSVDD(hidden=(8, 4), seed=0).reset()
        det.score_all(np.zeros((3, 5)))
        assert all(layer.bias is None for layer in det._layers)

    def test_gradients_one_class(self):
        det = DeepSVDD(hidden=(6, 3), seed=5).reset(RngStream(5, 0))
        rng = RngStream(5, 1).generator()
        X = rng.standard_normal((8, 4))
        w = rng.uniform(0.1, 1.0, size=8)
        det.score_all(X)
        assert grad_check(det, X, w) < 1e-4

    def test_gradients_soft_boundary(self):
        det = DeepSVDD(hidden=(6, 3), mode="soft-boundary", nu=0.3, seed=6)
        det.reset(RngStream(6, 0))
        rng = RngStream(6, 1).generator()
        X = rng.standard_normal((8, 4))
        w = rng.uniform(0.1, 1.0, size=8)
        f = det.score_all(X)
        # park the squared radius mid-gap so finite differences stay off the hinge
        mid = np.sort(f)[f.size // 2 : f.size // 2 + 2]
        det.radius_sq_ = float(mid.mean())
        assert grad_check(det, X, w) < 1e-4


class TestAutoencoder:
    def test_perfect_reconstruction_scores_zero(self):
        det = Autoencoder(hidden=(4, 2), seed=0).reset()
        det.score_all(np.zeros((2, 3)))
        det._layers = [Dense(np.eye(3), bias=np.zeros(3), activation=IDENTITY)]
        X = RngStream(0, 1).generator().standard_normal((5, 3))
        np.testing.assert_array_equal(det.score_all(X), np.zeros(5))

    def test_zero_reconstruction_gives_squared_norm(self):
        det = Autoencoder(hidden=(3, 2), seed=0).reset()
        det.score_all(np.zeros((2, 2)))
        for layer in det._layers:
            layer.weight[...] = 0.0
            layer.bias[...] = 0.0
        assert det.score_all(np.array([[1.0, 0.0]]))[0] == 1.0

    def test_scores_match_independent_evaluation(self):
        det = Autoencoder(hidden=(5, 2), seed=2).reset(RngStream(2, 0))
        rng = RngStream(2, 1).generator()
        X = rng.standard_normal((12, 4))
        got = det.score_all(X)
        out = X
        for layer in det._layers[:-1]:
            out = leaky(out @ layer.weight.T + layer.bias)
        out = out @ det._layers[-1].weight.T + det._layers[-1].bias
        np.testing.assert_allclose(got, np.sum((X - out) ** 2, axis=1), rtol=1e-12)

    def test_decoder_mirrors_encoder(self):
        det = Autoencoder(hidden=(32, 16, 8), seed=0).reset()
        det.score_all(np.zeros((2, 36)))
        dims = [layer.in_dim for layer in det._layers] + [det._layers[-1].out_dim]
        assert dims == [36, 32, 16, 8, 16, 32, 36]

    def test_gradients(self):
        det = Autoencoder(hidden=(5, 2), seed=7).reset(RngStream(7, 0))
        rng = RngStream(7, 1).generator()
        X = rng.standard_normal((6, 4))
        w = rng.uniform(0.1, 1.0, size=6)
        det.score_all(X)
        assert grad_check(det, X, w) < 1e-4

    def test_duplicated_sample_equals_doubled_weight(self):
        # full-batch gradients, both normalised to the original n via the
        # linearity of the weighted loss
        det = Autoencoder(hidden=(3, 2), lr=0.0, seed=9).reset(RngStream(9, 0))
        rng = RngStream(9, 1).generator()
        X = rng.standard_normal((6, 3))
        det.score_all(X)
        n = X.shape[0]
        w = np.ones(n)
        w[2] = 2.0 / 2.0  # placeholder to keep shapes obvious
        doubled = np.ones(n)
        doubled[2] = 2.0
        # check_weights requires [0,1]; call the internal path directly
        _, g_weighted = det._loss_and_param_grads(X, doubled)
        g_weighted = [g * n for g in g_weighted]
        X_dup = np.vstack([X, X[2:3]])
        _, g_dup = det._loss_and_param_grads(X_dup, np.ones(n + 1))
        g_dup = [g * (n + 1) for g in g_dup]
        for a, b in zip(g_weighted, g_dup):
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)


class TestTrainingEngine:
    def test_zero_weights_leave_parameters_unchanged(self):
        det = Autoencoder(hidden=(4, 2), weight_decay=0.0, seed=4)
        det.reset(RngStream(4, 0))
        X = RngStream(4, 1).generator().standard_normal((20, 3))
        det.score_all(X)
        before = [p.copy() for p in det.parameters()]
        det.train_epoch(X, np.zeros(20))
        for a, b in zip(before, det.parameters()):
            np.testing.assert_array_equal(a, b)
        assert det._optimizer.t > 0

    def test_unit_weights_match_unweighted_trajectory(self):
        def run(weights):
            det = Autoencoder(hidden=(4, 2), seed=8).reset(RngStream(8, 0))
            X = RngStream(8, 1).generator().standard_normal((30, 3))
            for _ in range(3):
                det.train_epoch(X, weights)
            return det.score_all(X)

        np.testing.assert_array_equal(run(None), run(np.ones(30)))

    def test_training_reduces_loss(self):
        det = Autoencoder(hidden=(8, 4), seed=10).reset(RngStream(10, 0))
        X = RngStream(10, 1).generator().standard_normal((200, 6))
        first = det.train_epoch(X)
        for _ in range(30):
            last = det.train_epoch(X)
        assert last < first

    def test_divergence_aborts(self):
        det = Autoencoder(hidden=(4, 2), lr=1e12, seed=11).reset(RngStream(11, 0))
        X = RngStream(11, 1).generator().standard_normal((40, 3)) * 10.0
        with pytest.raises(TrainingAbortError):
            for _ in range(50):
                det.train_epoch(X)

    def test_scores_invariant_to_row_order(self):
        for det in (DeepSVDD(hidden=(4,), seed=1), Autoencoder(hidden=(4, 2), seed=1)):
            det.reset(RngStream(1, 0))
            rng = RngStream(1, 1).generator()
            X = rng.standard_normal((25, 3))
            base = det.score_all(X)
            perm = rng.permutation(25)
            np.testing.assert_allclose(
                det.score_all(X[perm]), base[perm], rtol=1e-12, atol=1e-14
            )

    def test_score_all_is_deterministic(self):
        det = DeepSVDD(hidden=(6, 3), seed=2).reset(RngStream(2, 0))
        X = RngStream(2, 1).generator().standard_normal((15, 4))
        det.train_epoch(X)
        np.testing.assert_array_equal(det.score_all(X), det.score_all(X))


class TestEstimatorSurface:
    def test_fit_decision_function(self):
        det = Autoencoder(hidden=(4, 2), epochs=3, seed=0)
        X = RngStream(12, 0).generator().standard_normal((50, 5))
        det.fit(X)
        assert det.decision_scores_.shape == (50,)
        np.testing.assert_array_equal(det.decision_function(X), det.score_all(X))

    def test_unfitted_decision_function_raises(self):
        with pytest.raises(RuntimeError):
            Autoencoder().decision_function(np.zeros((2, 2)))

    def test_get_params_round_trip(self):
        det = DeepSVDD(hidden=(8, 4), mode="soft-boundary", nu=0.2, seed=5)
        params = det.get_params()
        clone = DeepSVDD(**params)
        assert clone.get_params() == params

    def test_sklearn_clone(self):
        from sklearn.base import clone

        det = MaskedAutoregressiveFlow(n_blocks=3, hidden_units=8, seed=2)
        cloned = clone(det)
        assert cloned.get_params() == det.get_params()

    def test_make_detector_names(self):
        assert make_detector("svdd-oc").mode == "one-class"
        assert make_detector("svdd-sb").mode == "soft-boundary"
        assert isinstance(make_detector("ae"), Autoencoder)
        assert isinstance(make_detector("maf"), MaskedAutoregressiveFlow)
        with pytest.raises(ValueError):
            make_detector("isolation-forest")


class TestCheckpoints:
    @pytest.mark.parametrize(
        "det",
        [
            DeepSVDD(hidden=(6, 3), mode="soft-boundary", nu=0.4, seed=3),
            Autoencoder(hidden=(5, 2), seed=3),
            MaskedAutoregressiveFlow(n_blocks=3, hidden_units=8, seed=3),
        ],
    )
    def test_round_trip_is_bit_exact(self, det, tmp_path):
        rng = RngStream(13, 0).generator()
        X = rng.standard_normal((30, 4))
        det.reset(RngStream(13, 1))
        det.train_epoch(X)
        scores = det.score_all(X)
        path = tmp_path / "model.npz"
        save_checkpoint(path, det, extra_meta={"tag": "test"})
        restored, meta = load_checkpoint(path)
        assert meta["extra"]["tag"] == "test"
        assert type(restored) is type(det)
        np.testing.assert_array_equal(restored.score_all(X), scores)
        for k, v in det.get_state()["arrays"].items():
            np.testing.assert_array_equal(restored.get_state()["arrays"][k], v)

    def test_state_snapshot_restore_in_memory(self):
        det = Autoencoder(hidden=(4, 2), seed=6).reset(RngStream(6, 0))
        X = RngStream(6, 1).generator().standard_normal((40, 3))
        det.train_epoch(X)
        snap = det.get_state()
        scores = det.score_all(X)
        det.train_epoch(X)
        assert not np.array_equal(det.score_all(X), scores)
        det.set_state(snap)
        np.testing.assert_array_equal(det.score_all(X), scores)
