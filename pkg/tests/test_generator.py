import numpy as np
import pytest

from obgcs import (DimensionMismatchError, GeneratorNetwork, LatentPoint,
                   MalformedFileError, NonFiniteError, ShapeError,
                   architecture_summary, forward, forward_batch, latent_vjp,
                   latent_vjp_batch, lipschitz_upper_bound, load_generator,
                   save_generator, synth_generator)
from conftest import preacts_away_from_kinks


def identity_net(n, relu=False):
    return GeneratorNetwork([n, n], [np.eye(n)], [np.zeros(n)],
                            final_activation="relu" if relu else "identity")


class TestForward:
    def test_identity_network(self):
        net = identity_net(2)
        out = forward(net, np.array([0.3, -0.5]))
        np.testing.assert_array_equal(out, [0.3, -0.5])

    def test_relu_kills_negatives(self):
        net = identity_net(2, relu=True)
        out = forward(net, np.array([0.3, -0.5]))
        np.testing.assert_array_equal(out, [0.3, 0.0])

    def test_matches_hand_rolled_evaluation(self):
        # independent straight-line evaluation of a 2-layer net
        rng = np.random.default_rng(3)
        W1 = rng.standard_normal((7, 4))
        b1 = rng.standard_normal(7)
        W2 = rng.standard_normal((5, 7))
        b2 = rng.standard_normal(5)
        net = GeneratorNetwork([4, 7, 5], [W1, W2], [b1, b2])
        z = rng.standard_normal(4)
        h = W1 @ z + b1
        h = np.where(h > 0, h, 0.0)
        expected = W2 @ h + b2
        np.testing.assert_allclose(forward(net, z), expected, atol=1e-12)

    def test_shape_error(self, small_net):
        with pytest.raises(ShapeError):
            forward(small_net, np.zeros(small_net.latent_dim + 1))

    def test_accepts_latent_point(self, small_net):
        z = np.zeros(small_net.latent_dim)
        np.testing.assert_array_equal(forward(small_net, LatentPoint(z, 1.0)),
                                      forward(small_net, z))

    def test_batch_matches_single(self, small_net):
        rng = np.random.default_rng(0)
        Z = rng.standard_normal((small_net.latent_dim, 6))
        batch = forward_batch(small_net, Z)
        for i in range(6):
            np.testing.assert_allclose(batch[:, i], forward(small_net, Z[:, i]),
                                       rtol=0, atol=1e-12)

    def test_deterministic(self, small_net):
        z = np.random.default_rng(1).standard_normal(small_net.latent_dim)
        np.testing.assert_array_equal(forward(small_net, z), forward(small_net, z))


class TestLatentPoint:
    def test_ball_membership_enforced(self):
        with pytest.raises(ValueError):
            LatentPoint(np.array([1.0, 1.0]), radius_bound=1.0)

    def test_valid(self):
        lp = LatentPoint(np.array([0.5, 0.5]), radius_bound=1.0)
        assert lp.radius_bound == 1.0


class TestLatentVjp:
    def test_identity_network(self):
        net = identity_net(3)
        v = np.array([1.0, -2.0, 0.5])
        np.testing.assert_array_equal(latent_vjp(net, np.zeros(3), v), v)

    def test_positive_preactivations_reduce_to_linear(self):
        rng = np.random.default_rng(5)
        W = rng.standard_normal((6, 4))
        net = GeneratorNetwork([4, 6], [W], [np.full(6, 10.0)],
                               final_activation="relu")
        z = 0.01 * rng.standard_normal(4)  # keeps pre-activations > 0
        v = rng.standard_normal(6)
        np.testing.assert_allclose(latent_vjp(net, z, v), W.T @ v, atol=1e-12)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        checked = 0
        trials = 0
        while checked < 25 and trials < 500:
            trials += 1
            net = synth_generator(k=4, n=12, hidden_dims=[10, 8], seed=trials)
            z = rng.standard_normal(4)
            if not preacts_away_from_kinks(net, z):
                continue
            checked += 1
            v = rng.standard_normal(12)
            g = latent_vjp(net, z, v)
            fd = np.zeros(4)
            for j in range(4):
                e = np.zeros(4)
                e[j] = 1e-5
                fd[j] = (forward(net, z + e) @ v - forward(net, z - e) @ v) / 2e-5
            rel = np.max(np.abs(g - fd)) / max(np.max(np.abs(fd)), 1e-12)
            assert rel < 1e-4
        assert checked == 25

    def test_sigmoid_and_normalization_path(self):
        rng = np.random.default_rng(7)
        net = GeneratorNetwork(
            [3, 8, 6],
            [0.5 * rng.standard_normal((8, 3)), 0.3 * rng.standard_normal((6, 8))],
            [np.zeros(8), np.zeros(6)],
            final_activation="sigmoid", normalize_output=True)
        z = np.array([0.3, -0.2, 0.5])
        v = rng.standard_normal(6)
        g = latent_vjp(net, z, v)
        fd = np.zeros(3)
        for j in range(3):
            e = np.zeros(3)
            e[j] = 1e-6
            fd[j] = (forward(net, z + e) @ v - forward(net, z - e) @ v) / 2e-6
        np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-8)

    def test_batch_matches_single(self, small_net):
        rng = np.random.default_rng(2)
        Z = rng.standard_normal((4, 5))
        V = rng.standard_normal((12, 5))
        batch = latent_vjp_batch(small_net, Z, V)
        for i in range(5):
            np.testing.assert_allclose(batch[:, i],
                                       latent_vjp(small_net, Z[:, i], V[:, i]),
                                       atol=1e-12)


class TestLipschitzBound:
    def test_scaled_identity(self):
        net = GeneratorNetwork([3, 3], [2.0 * np.eye(3)], [np.zeros(3)])
        assert lipschitz_upper_bound(net) == pytest.approx(2.0, abs=1e-7)

    def test_product_of_layers(self):
        net = GeneratorNetwork([3, 3, 3], [3.0 * np.eye(3), 2.0 * np.eye(3)],
                               [np.zeros(3), np.zeros(3)])
        assert lipschitz_upper_bound(net) == pytest.approx(6.0, abs=1e-6)

    def test_sigmoid_quarter_factor(self):
        net = GeneratorNetwork([3, 3], [2.0 * np.eye(3)], [np.zeros(3)],
                               final_activation="sigmoid")
        assert lipschitz_upper_bound(net) == pytest.approx(0.5, abs=1e-7)

    def test_sampled_ratios_never_exceed_bound(self):
        net = synth_generator(k=5, n=30, hidden_dims=[20], seed=3)
        bound = lipschitz_upper_bound(net)
        rng = np.random.default_rng(1)
        Z1 = rng.standard_normal((5, 10_000))
        Z2 = rng.standard_normal((5, 10_000))
        num = np.linalg.norm(forward_batch(net, Z1) - forward_batch(net, Z2), axis=0)
        den = np.linalg.norm(Z1 - Z2, axis=0)
        assert np.max(num / den) <= bound * (1 + 1e-12)

    def test_caches_value(self, small_net):
        val = lipschitz_upper_bound(small_net)
        assert small_net.lipschitz_bound == val


class TestSaveLoad:
    def test_binary_round_trip(self, tmp_path, small_net):
        path = tmp_path / "net.bin"
        save_generator(small_net, path)
        loaded = load_generator(path)
        assert loaded.layer_dims == small_net.layer_dims
        for a, b in zip(loaded.weights, small_net.weights):
            np.testing.assert_array_equal(a, b)
        for a, b in zip(loaded.biases, small_net.biases):
            np.testing.assert_array_equal(a, b)

    def test_text_round_trip(self, tmp_path, small_net):
        path = tmp_path / "net.json"
        save_generator(small_net, path)
        loaded = load_generator(path)
        for a, b in zip(loaded.weights, small_net.weights):
            np.testing.assert_array_equal(a, b)

    def test_truncated_file(self, tmp_path, small_net):
        path = tmp_path / "net.bin"
        save_generator(small_net, path)
        data = path.read_bytes()
        path.write_bytes(data[:len(data) // 2])
        with pytest.raises(MalformedFileError):
            load_generator(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "net.bin"
        path.write_bytes(b"NOT-A-NET v9\n{}\n")
        with pytest.raises(MalformedFileError):
            load_generator(path)

    def test_dimension_mismatch_in_text_form(self, tmp_path):
        # header declares a 500-unit layer but provides fewer rows
        doc = {
            "format": "OBGCS-GEN v1",
            "layer_dims": [2, 500],
            "activation": "identity",
            "layers": [{"weights": [[1.0, 0.0], [0.0, 1.0]], "bias": [0.0, 0.0]}],
        }
        import json
        path = tmp_path / "net.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(DimensionMismatchError):
            load_generator(path)

    def test_non_finite_entries(self, tmp_path):
        import json
        doc = {
            "format": "OBGCS-GEN v1",
            "layer_dims": [2, 2],
            "activation": "identity",
            "layers": [{"weights": [[1.0, 0.0], [0.0, None]], "bias": [0.0, 0.0]}],
        }
        path = tmp_path / "net.json"
        path.write_text(json.dumps(doc).replace("null", "NaN"))
        with pytest.raises(NonFiniteError):
            load_generator(path)

    def test_preserves_activation_and_normalization(self, tmp_path):
        net = synth_generator(k=3, n=8, hidden_dims=[6], seed=0, unit_sphere=True,
                              final_activation="relu")
        path = tmp_path / "n.bin"
        save_generator(net, path)
        loaded = load_generator(path)
        assert loaded.final_activation == "relu"
        assert loaded.normalize_output


class TestSynthGenerator:
    def test_deterministic_in_seed(self):
        a = synth_generator(k=3, n=10, hidden_dims=[5], seed=9)
        b = synth_generator(k=3, n=10, hidden_dims=[5], seed=9)
        for wa, wb in zip(a.weights, b.weights):
            np.testing.assert_array_equal(wa, wb)

    def test_unit_sphere_option(self):
        net = synth_generator(k=4, n=20, hidden_dims=[8], seed=2, unit_sphere=True)
        rng = np.random.default_rng(0)
        for _ in range(20):
            out = forward(net, rng.standard_normal(4))
            assert abs(np.linalg.norm(out) - 1.0) < 1e-12

    def test_mnist_style_dims(self):
        net = synth_generator(k=20, n=784, hidden_dims=[500, 500], seed=0)
        assert net.layer_dims == [20, 500, 500, 784]

    def test_positive_homogeneity(self):
        # zero biases make the map a cone: G(a z) = a G(z) for a > 0
        net = synth_generator(k=3, n=15, hidden_dims=[9], seed=4)
        z = np.random.default_rng(5).standard_normal(3)
        np.testing.assert_allclose(forward(net, 2.5 * z), 2.5 * forward(net, z),
                                   rtol=1e-12)

    def test_unit_l1_image_option(self):
        net = synth_generator(k=4, n=20, hidden_dims=[8], seed=2, unit_l1_image=True)
        rng = np.random.default_rng(1)
        for _ in range(200):
            z = rng.standard_normal(4)
            z /= max(np.linalg.norm(z), 1.0)  # unit-ball latent
            assert np.abs(forward(net, z)).sum() <= 1.0 + 1e-12

    def test_normalization_options_mutually_exclusive(self):
        with pytest.raises(ValueError):
            synth_generator(k=2, n=4, seed=0, unit_sphere=True, unit_l1_image=True)

    def test_invalid_dims(self):
        with pytest.raises(ShapeError):
            synth_generator(k=0, n=5)


class TestArchitectureSummary:
    def test_counts(self, small_net):
        arch = architecture_summary(small_net)
        assert arch["affine_layers"] == 3
        assert arch["hidden_layers"] == 2
        assert arch["max_width"] == 10
