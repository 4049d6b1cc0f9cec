import numpy as np
import pytest

from conftest import random_psd
from squeak.baselines import d_max, oracle_rls_sample, uniform_sample
from squeak.nystrom import sketch_from_matrix
from squeak.rls import effective_dimension, exact_rls


def test_uniform_exhaustive_is_full_dictionary(rng):
    K = random_psd(rng, 9)
    d = uniform_sample(9, 9, rng, replace=False)
    assert d.indices.tolist() == list(range(1, 10))
    assert np.allclose(d.weights(), 1.0)
    gamma = 0.5
    K_tilde = sketch_from_matrix(K, d, gamma).materialize()
    assert np.allclose(K_tilde, K @ np.linalg.solve(K + gamma * np.eye(9), K), atol=1e-10)


def test_uniform_single_draw_rank_one(rng):
    K = random_psd(rng, 8)
    d = uniform_sample(8, 1, rng)
    assert d.size == 1 and d.copies == 1
    assert np.linalg.matrix_rank(sketch_from_matrix(K, d, 1.0).materialize(), tol=1e-10) <= 1


def test_uniform_frequencies():
    n, draws = 10, 100_000
    d = uniform_sample(n, draws, np.random.default_rng(0))
    counts = np.zeros(n)
    counts[d.indices - 1] = d.counts
    p = 1 / n
    assert np.all(np.abs(counts / draws - p) <= 3 * np.sqrt(p * (1 - p) / draws))
    assert np.allclose(d.probs, p)


def test_oracle_identity_is_uniform():
    d = oracle_rls_sample(np.eye(6), 1.0, 30, np.random.default_rng(1))
    assert np.allclose(d.probs, 1 / 6)


def test_oracle_rank_one_symmetric():
    K = np.ones((5, 5))
    d = oracle_rls_sample(K, 1.0, 50_000, np.random.default_rng(2))
    assert np.allclose(d.probs, 0.2)
    assert np.all(np.abs(d.counts / 50_000 - 0.2) <= 3 * np.sqrt(0.16 / 50_000))


def test_oracle_frequencies(rng):
    K = random_psd(rng, 10, rank=4)
    tau = exact_rls(K, 0.5)
    p = tau / tau.sum()
    draws = 100_000
    d = oracle_rls_sample(K, 0.5, draws, np.random.default_rng(3))
    counts = np.zeros(10)
    counts[d.indices - 1] = d.counts
    assert np.all(np.abs(counts / draws - p) <= 3 * np.sqrt(p * (1 - p) / draws) + 1e-12)


def test_d_max_examples():
    tau = exact_rls(np.eye(7), 2.0)
    assert d_max(tau) == pytest.approx(7 / 3) == pytest.approx(effective_dimension(tau))
    K = np.diag([1.0] + [1e-3] * 9)
    tau = exact_rls(K, 0.1)
    assert d_max(tau) > 5 * effective_dimension(tau)
    one = exact_rls(np.array([[2.0]]), 1.0)
    assert d_max(one, 1) == pytest.approx(effective_dimension(one))


def test_d_max_dominates_d_eff(rng):
    for _ in range(20):
        K = random_psd(rng, 12, rank=int(rng.integers(1, 12)))
        tau = exact_rls(K, float(rng.uniform(0.1, 5)))
        assert d_max(tau) >= effective_dimension(tau) - 1e-12
