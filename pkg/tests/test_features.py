"""Feature-map tests: kernel approximation against the exact Gaussian,
bandwidth heuristic, and the density-lifted embeddings."""

import numpy as np
import pytest

from hqmm.features import (
    OneHotMap,
    cross_covariance,
    density_feature,
    density_features,
    embed,
    embed_many,
    gaussian_kernel,
    mean_map,
    median_bandwidth,
    sample_rff,
)
from hqmm.quantum import is_density, unvectorize


class TestMedianBandwidth:
    def test_hand_computed(self):
        assert median_bandwidth([np.array([[0.0], [1.0], [3.0]])]) == pytest.approx(1.5)

    def test_constant_sequence_rejected(self):
        with pytest.raises(ValueError):
            median_bandwidth([np.zeros((10, 2))])

    def test_homogeneous_in_scale(self):
        rng = np.random.default_rng(0)
        seq = rng.standard_normal((50, 3))
        base = median_bandwidth([seq])
        np.testing.assert_allclose(median_bandwidth([2.5 * seq]), 2.5 * base, rtol=1e-12)

    def test_multiple_sequences_pooled(self):
        seqs = [np.array([[0.0], [1.0]]), np.array([[0.0], [3.0]])]
        assert median_bandwidth(seqs) == pytest.approx(2.0)


class TestSampleRff:
    def test_deterministic_in_seed(self):
        a = sample_rff(3, 50, 1.0, seed=42)
        b = sample_rff(3, 50, 1.0, seed=42)
        np.testing.assert_array_equal(a.frequencies, b.frequencies)
        np.testing.assert_array_equal(a.phases, b.phases)

    def test_frequency_variance(self):
        sigma = 0.5
        fmap = sample_rff(20, 1000, sigma, seed=7)
        emp = fmap.frequencies.var()
        assert abs(emp - 1.0 / sigma ** 2) < 0.1 / sigma ** 2

    def test_single_feature(self):
        fmap = sample_rff(2, 1, 1.0, seed=0)
        assert embed(fmap, [0.3, -0.1]).shape == (1,)

    def test_invalid_bandwidth(self):
        with pytest.raises(ValueError):
            sample_rff(2, 10, 0.0, seed=0)


class TestEmbed:
    def test_unit_norm(self):
        fmap = sample_rff(4, 200, 1.0, seed=1)
        rng = np.random.default_rng(2)
        cols = embed_many(fmap, rng.standard_normal((20, 4)))
        np.testing.assert_allclose(np.linalg.norm(cols, axis=0), 1.0, atol=1e-9)

    def test_kernel_approximation(self):
        # pairs within 0.75 bandwidths, where the kernel discriminates;
        # beyond one bandwidth the 0.05 sup bound is not attainable at D=1000
        sigma = 1.3
        fmap = sample_rff(5, 1000, sigma, seed=3)
        rng = np.random.default_rng(4)
        worst = 0.0
        for _ in range(100):
            x = rng.standard_normal(5)
            step = rng.standard_normal(5)
            step *= rng.uniform(0.0, 0.75 * sigma) / np.linalg.norm(step)
            y = x + step
            approx = embed(fmap, x) @ embed(fmap, y)
            worst = max(worst, abs(approx - gaussian_kernel(x, y, sigma)))
        assert worst <= 0.05

    def test_kernel_estimate_bounded(self):
        fmap = sample_rff(3, 50, 0.7, seed=5)
        rng = np.random.default_rng(6)
        for _ in range(50):
            v = embed(fmap, rng.standard_normal(3)) @ embed(fmap, rng.standard_normal(3))
            assert -1.0 <= v <= 1.0

    def test_dimension_mismatch(self):
        fmap = sample_rff(3, 10, 1.0, seed=0)
        with pytest.raises(ValueError):
            embed(fmap, np.zeros(4))


class TestDensityFeature:
    def test_trace_one_rank_one(self):
        fmap = sample_rff(2, 64, 1.0, seed=8)
        rho = unvectorize(density_feature(fmap, [0.2, 0.4]))
        assert is_density(rho)
        w = np.linalg.eigvalsh(rho)
        assert np.sum(w > 1e-10) == 1

    def test_inner_product_is_squared_kernel(self):
        fmap = sample_rff(3, 128, 1.0, seed=9)
        rng = np.random.default_rng(10)
        for _ in range(10):
            x, y = rng.standard_normal(3), rng.standard_normal(3)
            k = embed(fmap, x) @ embed(fmap, y)
            d = density_feature(fmap, x) @ density_feature(fmap, y)
            np.testing.assert_allclose(d, k ** 2, atol=1e-10)
            assert d >= 0.0

    def test_self_inner_product_is_one(self):
        fmap = sample_rff(2, 32, 1.0, seed=11)
        v = density_feature(fmap, [1.0, -1.0])
        np.testing.assert_allclose(v @ v, 1.0, atol=1e-10)

    def test_batch_matches_single(self):
        fmap = sample_rff(2, 16, 1.0, seed=12)
        xs = np.random.default_rng(13).standard_normal((4, 2))
        cols = density_features(embed_many(fmap, xs))
        for i, x in enumerate(xs):
            np.testing.assert_allclose(cols[:, i], density_feature(fmap, x), atol=1e-12)


class TestMeanMap:
    def test_single_point(self):
        fmap = sample_rff(2, 32, 1.0, seed=14)
        x = np.array([0.5, 0.5])
        np.testing.assert_allclose(
            mean_map(embed(fmap, x).reshape(-1, 1)), density_feature(fmap, x), atol=1e-12
        )

    def test_orthogonal_features_half_half(self):
        cols = np.array([[1.0, 0.0], [0.0, 1.0]])
        rho = unvectorize(mean_map(cols))
        np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(rho)), [0.5, 0.5], atol=1e-12)

    def test_trace_one(self):
        fmap = sample_rff(3, 64, 1.0, seed=15)
        cols = embed_many(fmap, np.random.default_rng(16).standard_normal((30, 3)))
        rho = unvectorize(mean_map(cols))
        np.testing.assert_allclose(np.trace(rho), 1.0, atol=1e-9)
        assert is_density(rho)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mean_map(np.zeros((4, 0)))


class TestCrossCovariance:
    def test_single_pair_outer_product(self):
        fmap = sample_rff(2, 8, 1.0, seed=17)
        vx = density_feature(fmap, [0.1, 0.2])
        vy = density_feature(fmap, [1.0, -1.0])
        np.testing.assert_allclose(
            cross_covariance(vy.reshape(-1, 1), vx.reshape(-1, 1)), np.outer(vy, vx), atol=1e-12
        )

    def test_identical_columns_rank_one(self):
        fmap = sample_rff(2, 8, 1.0, seed=18)
        v = density_feature(fmap, [0.3, 0.3]).reshape(-1, 1)
        c = cross_covariance(np.repeat(v, 5, axis=1), np.repeat(v, 5, axis=1))
        assert np.linalg.matrix_rank(c, tol=1e-10) == 1

    def test_symmetric_input_gives_psd_joint(self):
        fmap = sample_rff(2, 6, 1.0, seed=19)
        xs = np.random.default_rng(20).standard_normal((12, 2))
        cols = density_features(embed_many(fmap, xs))
        c = cross_covariance(cols, cols)
        # realigned back, a same-variable joint is a PSD Gram-like matrix
        w = np.linalg.eigvalsh((c + c.conj().T) / 2)
        assert w.min() >= -1e-10

    def test_count_mismatch(self):
        with pytest.raises(ValueError):
            cross_covariance(np.zeros((4, 3)), np.zeros((4, 2)))


class TestOneHotMap:
    def test_single_symbol_delta_kernel(self):
        fmap = OneHotMap(n_symbols=3)
        k01 = embed(fmap, [0]) @ embed(fmap, [1])
        k00 = embed(fmap, [0]) @ embed(fmap, [0])
        assert k01 == 0.0 and k00 == 1.0

    def test_window_normalization(self):
        fmap = OneHotMap(n_symbols=2, input_dim=4)
        v = embed(fmap, [0, 1, 1, 0])
        np.testing.assert_allclose(np.linalg.norm(v), 1.0)

    def test_out_of_range_symbol(self):
        with pytest.raises(ValueError):
            embed(OneHotMap(n_symbols=2), [5])
