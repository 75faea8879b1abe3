import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st
from sklearn.metrics import adjusted_rand_score

from scdiar.clustering import (
    ClusterLabels,
    cosine_similarity,
    estimate_k,
    kmeans,
    laplacian_spectrum,
    normalized_laplacian,
    spectral_cluster,
)
from scdiar.errors import ComputationError, UsageError, ValidationError


def block_similarity(sizes, rng=None, within=(1.0, 1.0)):
    n = sum(sizes)
    s = np.zeros((n, n))
    start = 0
    for size in sizes:
        block = np.full((size, size), within[0]) if rng is None else rng.uniform(*within, (size, size))
        block = (block + block.T) / 2
        s[start:start + size, start:start + size] = block
        start += size
    np.fill_diagonal(s, 1.0)
    return s


def truth(sizes):
    return np.repeat(np.arange(len(sizes)), sizes)


class TestCosine:
    def test_orthogonal(self):
        assert cosine_similarity(np.array([[1.0, 0], [0, 1]]))[0, 1] == 0

    def test_scale_invariant(self):
        assert cosine_similarity(np.array([[1.0, 0], [2, 0]]))[0, 1] == 1

    def test_opposite(self):
        assert cosine_similarity(np.array([[1.0, 0], [-1, 0]]))[0, 1] == -1

    def test_zero_vector(self):
        with pytest.raises(ComputationError, match="embedding 1"):
            cosine_similarity(np.array([[1.0, 0], [0, 0]]))

    def test_symmetric_unit_diagonal(self):
        x = np.random.default_rng(1).standard_normal((20, 7))
        s = cosine_similarity(x)
        assert np.array_equal(s, s.T)
        assert np.all(np.diag(s) == 1)
        assert s.min() >= -1 and s.max() <= 1


class TestLaplacian:
    def test_two_blocks_spectrum(self):
        evals, _ = laplacian_spectrum(block_similarity([2, 2]))
        np.testing.assert_allclose(evals, [0, 0, 2, 2], atol=1e-12)

    def test_k3_spectrum(self):
        evals, _ = laplacian_spectrum(np.ones((3, 3)))
        np.testing.assert_allclose(evals, [0, 1.5, 1.5], atol=1e-12)

    def test_matches_networkx(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            x = rng.standard_normal((15, 4))
            s = cosine_similarity(x)
            a = np.maximum(s, 0)
            np.fill_diagonal(a, 0)
            g = nx.from_numpy_array(a)
            if any(d == 0 for _, d in g.degree(weight="weight")):
                continue
            ref = nx.normalized_laplacian_matrix(g, nodelist=range(15), weight="weight").toarray()
            np.testing.assert_allclose(normalized_laplacian(s), ref, atol=1e-12)

    def test_isolated_node_stays_finite(self):
        s = np.array([[1.0, 0.9, -0.5], [0.9, 1.0, -0.2], [-0.5, -0.2, 1.0]])
        lap = normalized_laplacian(s)
        assert np.all(np.isfinite(lap))
        assert lap[2, 2] == 1.0

    def test_asymmetric_rejected(self):
        s = np.eye(3)
        s[0, 1] = 0.5
        with pytest.raises(ValidationError):
            spectral_cluster(s)

    @given(st.integers(2, 30), st.integers(0, 10_000))
    def test_eigenvalues_within_bounds(self, n, seed):
        x = np.random.default_rng(seed).standard_normal((n, 5))
        evals, _ = laplacian_spectrum(cosine_similarity(x))
        assert evals.min() >= -1e-9 and evals.max() <= 2 + 1e-9


class TestSpectralCluster:
    def test_two_blocks(self):
        res = spectral_cluster(block_similarity([2, 2]), alpha=0.5, max_speakers=None)
        assert res.k == 2
        assert adjusted_rand_score(truth([2, 2]), res.labels) == 1.0

    def test_k3_single_cluster(self):
        res = spectral_cluster(np.ones((3, 3)), alpha=1.0, max_speakers=None)
        assert res.k == 1 and set(res.labels) == {0}

    def test_single_point(self):
        res = spectral_cluster(np.ones((1, 1)))
        assert res.k == 1 and res.labels.tolist() == [0]

    def test_max_speakers_clamps(self):
        s = block_similarity([3, 3, 3, 3])
        assert spectral_cluster(s, alpha=0.5, max_speakers=2).k == 2
        assert spectral_cluster(s, alpha=0.5, max_speakers=None).k == 4

    def test_oracle_k_overrides(self):
        s = block_similarity([3, 3, 3])
        res = spectral_cluster(s, alpha=0.5, max_speakers=None, oracle_k=2)
        assert res.k == 2
        assert spectral_cluster(np.ones((1, 1)), oracle_k=2).k == 1

    def test_estimate_k_clamping(self):
        assert estimate_k(np.array([0.9, 1.0]), 0.5) == 1
        assert estimate_k(np.array([0.0, 0.0, 0.0]), 0.5, 2) == 2

    def test_bad_alpha(self):
        with pytest.raises(UsageError):
            spectral_cluster(np.ones((2, 2)), alpha=0)

    @pytest.mark.parametrize("c", [1, 2, 3, 4, 5])
    def test_component_count(self, c):
        rng = np.random.default_rng(c)
        sizes = rng.integers(2, 12, c).tolist()
        res = spectral_cluster(block_similarity(sizes, rng, (0.5, 1.0)), alpha=0.05, max_speakers=None)
        assert res.k == c
        assert adjusted_rand_score(truth(sizes), res.labels) == 1.0

    def test_permutation_invariance(self):
        rng = np.random.default_rng(7)
        sizes = [5, 8, 6]
        s = block_similarity(sizes, rng, (0.4, 1.0))
        base = spectral_cluster(s, alpha=0.1, max_speakers=None).labels
        for _ in range(10):
            p = rng.permutation(len(s))
            got = spectral_cluster(s[np.ix_(p, p)], alpha=0.1, max_speakers=None).labels
            assert adjusted_rand_score(base[p], got) == 1.0

    def test_deterministic(self):
        x = np.random.default_rng(5).standard_normal((60, 8))
        s = cosine_similarity(x)
        a = spectral_cluster(s, alpha=0.9, max_speakers=4, seed=11)
        b = spectral_cluster(s, alpha=0.9, max_speakers=4, seed=11)
        assert a.k == b.k and np.array_equal(a.labels, b.labels)

    @pytest.mark.parametrize("k, n, sigma", [(2, 50, 0.1), (3, 120, 0.1), (5, 200, 0.1), (4, 40, 0.05)])
    def test_noisy_prototype_recovery(self, k, n, sigma):
        rng = np.random.default_rng(k * 100 + n)
        dim = 32
        protos = np.linalg.qr(rng.standard_normal((dim, k)))[0].T  # orthonormal
        lab = rng.integers(0, k, n)
        lab[:k] = np.arange(k)
        x = protos[lab] + sigma * rng.standard_normal((n, dim))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        res = spectral_cluster(cosine_similarity(x), alpha=0.5, max_speakers=None)
        assert res.k == k
        assert adjusted_rand_score(lab, res.labels) == 1.0


class TestKmeans:
    def test_well_separated(self):
        res = kmeans(np.array([0.0, 0.1, 10.0, 10.1]), 2, seed=0)
        assert res.labels[0] == res.labels[1] != res.labels[2] == res.labels[3]

    def test_k_equals_n(self):
        res = kmeans(np.array([[0.0], [1.0], [5.0]]), 3)
        assert sorted(res.labels.tolist()) == [0, 1, 2]

    def test_identical_points(self):
        res = kmeans(np.zeros((5, 2)), 2)
        assert sorted(set(res.labels.tolist())) == [0, 1]

    def test_k_greater_than_n(self):
        with pytest.raises(UsageError):
            kmeans(np.zeros((2, 2)), 3)

    @given(st.integers(1, 6), st.integers(0, 1000))
    def test_labels_valid_and_deterministic(self, k, seed):
        rng = np.random.default_rng(seed)
        pts = rng.integers(0, 3, (12, 2)).astype(float)  # many duplicates
        a, b = kmeans(pts, k, seed), kmeans(pts, k, seed)
        assert np.array_equal(a.labels, b.labels)
        assert set(a.labels.tolist()) == set(range(k))

    def test_labels_invariant_checked(self):
        with pytest.raises(ValidationError):
            ClusterLabels(np.array([0, 2]), 2)
