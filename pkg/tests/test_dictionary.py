import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from squeak.dictionary import (Dictionary, expand, probability_update, selection_matrix,
                               selection_weights, shrink)
from squeak.exceptions import ContractViolation, InputError


def make(indices, counts, probs, qbar=4, step=None, dim=2):
    indices = np.asarray(indices)
    step = int(indices.max()) if step is None and indices.size else (step or 0)
    return Dictionary(indices, counts, probs, qbar, step, np.arange(indices.size * dim, dtype=float).reshape(-1, dim))


@pytest.mark.parametrize("tau,prev,expected", [(0.3, 0.5, 0.3), (0.05, 0.5, 0.25), (0.9, 0.5, 0.5)])
def test_probability_update_examples(tau, prev, expected):
    assert probability_update(tau, prev) == expected


@given(tau=st.floats(0, 1), prev=st.floats(1e-12, 1))
def test_probability_update_range(tau, prev):
    p = probability_update(tau, prev)
    assert prev / 2 <= p <= prev
    vec = probability_update(np.array([tau]), np.array([prev]))
    assert vec[0] == p


def test_dictionary_invariants():
    with pytest.raises(InputError):
        make([2, 1], [1, 1], [0.5, 0.5], step=3)
    with pytest.raises(InputError):
        make([1, 2], [0, 1], [0.5, 0.5])
    with pytest.raises(InputError):
        make([1, 2], [1, 1], [0.0, 0.5])
    with pytest.raises(InputError):
        make([1, 5], [1, 1], [0.5, 0.5], step=3)
    d = make([1, 4], [3, 2], [0.5, 0.25], step=5)
    assert d.copies == 5 and d.size == 2


def test_shrink_ratio_one_is_identity():
    d = make([1, 3, 4], [5, 1, 7], [0.5, 0.2, 1.0])
    out = shrink(d, {1: 0.5, 3: 0.2, 4: 1.0}, np.random.default_rng(0))
    assert out == d


def test_shrink_rejects_increase():
    d = make([1, 2], [2, 2], [0.5, 0.5])
    with pytest.raises(ContractViolation):
        shrink(d, [0.6, 0.5], np.random.default_rng(0))
    with pytest.raises(ContractViolation):
        shrink(d, {1: 0.5}, np.random.default_rng(0))


def test_shrink_binomial_mean():
    d = make([1], [10000], [0.8])
    draws = [shrink(d, [0.4], np.random.default_rng(s)).counts[0] for s in range(200)]
    stderr = np.sqrt(10000 * 0.25 / 200)
    assert abs(np.mean(draws) - 5000) <= 3 * stderr


def test_shrink_only_draws_for_present_entries():
    d = make([2, 5], [3, 4], [0.5, 0.5], step=6)
    a = shrink(d, [0.3, 0.3], np.random.default_rng(7))
    rng = np.random.default_rng(7)
    manual = rng.binomial([3, 4], [0.6, 0.6])
    assert np.array_equal(a.counts, manual[manual > 0])
    assert set(a.indices) <= {2, 5}
    assert np.all(a.probs == 0.3)


def test_shrink_drops_zero_multiplicities():
    d = make([1, 2, 3], [1, 1, 1], [1.0, 1.0, 1.0])
    seen_drop = False
    for s in range(50):
        out = shrink(d, [0.5, 0.5, 0.5], np.random.default_rng(s))
        assert np.all(out.counts >= 1)
        assert out.points.shape[0] == out.size
        seen_drop |= out.size < 3
    assert seen_drop


def test_expand_examples():
    d = Dictionary.empty(qbar=6, dim=2)
    full = expand(d, [1.0, 2.0], 1, 1.0, np.random.default_rng(0))
    assert full.counts.tolist() == [6] and full.step == 1
    assert np.array_equal(full.points, [[1.0, 2.0]])
    with pytest.raises(ContractViolation):
        expand(d, [1.0, 2.0], 2, 0.5, np.random.default_rng(0))
    with pytest.raises(ContractViolation):
        expand(d, [1.0, 2.0], 1, 0.0, np.random.default_rng(0))


def test_expand_tiny_probability():
    d = Dictionary.empty(qbar=5, dim=1)
    counts = [expand(d, [0.0], 1, 1e-12, np.random.default_rng(s)).copies for s in range(10_000)]
    mean, expected = np.mean(counts), 5 * 1e-12
    stderr = np.sqrt(5 * 1e-12 * (1 - 1e-12) / 10_000)
    assert abs(mean - expected) <= 3 * stderr + 1e-12
    assert expand(d, [0.0], 1, 1e-12, np.random.default_rng(0)).size == 0


def test_expand_half_probability_qbar_one():
    d = Dictionary.empty(qbar=1, dim=1)
    present = [expand(d, [0.0], 1, 0.5, np.random.default_rng(s)).size for s in range(10_000)]
    assert abs(np.mean(present) - 0.5) <= 3 * np.sqrt(0.25 / 10_000)


def test_selection_weights_examples():
    assert selection_weights(make([1], [4], [1.0], qbar=4)) == {1: 1.0}
    assert selection_weights(make([3], [1], [0.25], qbar=4, step=3)) == {3: 1.0}


def test_selection_weights_match_literal_matrix(rng):
    for _ in range(20):
        m = int(rng.integers(1, 6))
        idx = np.sort(rng.choice(12, m, replace=False)) + 1
        d = make(idx, rng.integers(1, 5, m), rng.uniform(0.05, 1, m), qbar=3, step=12)
        S = selection_matrix(d)
        SS = S @ S.T
        w = selection_weights(d)
        assert S.shape == (12, d.copies)
        for j in range(1, 13):
            assert SS[j - 1, j - 1] == pytest.approx(w.get(j, 0.0), rel=1e-14)
        off = SS - np.diag(np.diag(SS))
        assert np.all(off == 0)


def test_json_snapshot_roundtrip(rng):
    points = rng.standard_normal((10, 3))
    d = Dictionary([2, 7, 9], [3, 1, 2], [0.5, 0.125, 1.0], 4, 10, points[[1, 6, 8]])
    text = d.to_json()
    assert '"multiplicity": 3' in text
    assert Dictionary.from_json(text, qbar=4, step=10, points=points) == d


def test_shrink_expand_reproducible():
    d = make([1, 2, 3], [4, 4, 4], [0.9, 0.8, 0.7], step=3)

    def step(seed):
        rng = np.random.default_rng(seed)
        out = shrink(d, [0.5, 0.5, 0.5], rng)
        return expand(out, [9.0, 9.0], 4, 0.6, rng)

    assert step(3) == step(3)
    out = step(3)
    assert np.all(out.counts[:-1] <= 4)
    assert out.copies - shrink(d, [0.5] * 3, np.random.default_rng(3)).copies <= d.qbar
