import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from momentforge.constants import c_np
from momentforge.core import MomentInstance, canonical_instance, moment_ratio
from momentforge.errors import InvalidInstance, ReconstructionMismatch
from momentforge.hadamard import (
    balanced_factorization,
    RankFactoredMatrix, condition_iii_ratio, expand_factorization, hadamard_power,
    instance_to_matrix, multinomial, multiset_indices, numerical_rank,
)

from conftest import instances, random_instance


def all_tuples_power(left, right, m):
    """A**m as the sum over all n^m ordered index tuples of rank-one Hadamard products."""
    n = left.shape[1]
    out = np.zeros((left.shape[0], right.shape[1]))
    for tup in itertools.product(range(n), repeat=m):
        u = np.prod([left[:, r] for r in tup], axis=0)
        v = np.prod([right[r] for r in tup], axis=0)
        out += np.outer(u, v)
    return out


def random_factored(rng, k, l, n):
    return RankFactoredMatrix(rng.standard_normal((k, n)), rng.standard_normal((n, l)))


def test_factored_matrix_validation():
    with pytest.raises(InvalidInstance):
        RankFactoredMatrix(np.ones((2, 3)), np.ones((2, 2)))
    with pytest.raises(ReconstructionMismatch):
        RankFactoredMatrix(np.eye(2), np.eye(2), entries=[[1.0, 0.0], [0.0, 1.1]])
    m = RankFactoredMatrix(np.eye(2), np.eye(2), entries=np.eye(2))
    assert (m.rows, m.cols, m.inner_dim) == (2, 2, 2)


def test_instance_to_matrix_examples():
    mat, w = instance_to_matrix(canonical_instance(2, 2))
    np.testing.assert_allclose(w, np.full(4, 0.5))
    np.testing.assert_allclose(np.abs(mat.entries), 0.5 * np.kron(np.eye(2), [[1, 1]]))
    assert condition_iii_ratio(mat, 2).ratio == pytest.approx(math.sqrt(2), rel=1e-15)

    point = MomentInstance.from_arrays([[2.0, 1.0]], [[1.0, -3.0]], 3)
    mat, _ = instance_to_matrix(point)
    np.testing.assert_allclose(mat.entries, [[-1.0]])

    zero = MomentInstance.from_arrays([[0.0, 0.0], [0.0, 0.0]], [[1.0, 2.0]], 4)
    mat, _ = instance_to_matrix(zero)
    assert not np.any(mat.entries)
    assert condition_iii_ratio(mat, 4).degenerate


@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_condition_iii_identity(n):
    r = condition_iii_ratio(np.eye(n), 2)
    assert (r.lhs, r.rhs) == (pytest.approx(math.sqrt(n)), pytest.approx(1.0))
    for p in (2.5, 3, 7):
        assert condition_iii_ratio(np.eye(n), p).ratio == pytest.approx(n ** (1 / p), rel=1e-14)


def test_condition_iii_rank_one(rng):
    u, v = rng.standard_normal(6), rng.standard_normal(9)
    r = condition_iii_ratio(np.outer(u, v), 3.5)
    assert r.ratio == pytest.approx(1.0, rel=1e-13)
    assert r.lhs == pytest.approx(np.abs(u).max() * np.sum(np.abs(v) ** 3.5) ** (1 / 3.5), rel=1e-13)


def test_hadamard_power_examples():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(hadamard_power(a, 2), [[1, 4], [9, 16]])
    np.testing.assert_array_equal(hadamard_power(a, 1), a)
    np.testing.assert_array_equal(hadamard_power(np.ones((3, 4)), 7), np.ones((3, 4)))
    with pytest.raises(ValueError):
        hadamard_power(a, 0)


def test_hadamard_power_matches_repeated_products(rng):
    a = rng.standard_normal((7, 5))
    acc = a.copy()
    for m in range(2, 7):
        acc = acc * a
        np.testing.assert_allclose(hadamard_power(a, m), acc, rtol=1e-12)


def test_multiset_enumeration():
    assert list(multiset_indices(2, 2)) == [(0, 2), (1, 1), (2, 0)]
    for n in range(1, 7):
        for m in range(1, 6):
            idx = list(multiset_indices(n, m))
            assert len(idx) == math.comb(n + m - 1, m)
            assert idx == sorted(set(idx))
            assert all(sum(a) == m and len(a) == n for a in idx)
    assert multinomial((1, 1)) == 2 and multinomial((2, 0, 1)) == 3


@pytest.mark.parametrize("n,m,dim", [(2, 3, 4), (3, 2, 6), (1, 5, 1), (4, 1, 4)])
def test_expansion_inner_dimension(rng, n, m, dim):
    mat = random_factored(rng, 5, 6, n)
    assert expand_factorization(mat, m).inner_dim == dim


def test_expansion_n1():
    u, v = np.array([[2.0], [-1.0]]), np.array([[3.0, 0.5, -1.0]])
    ex = expand_factorization(RankFactoredMatrix(u, v), 4)
    np.testing.assert_allclose(ex.left, u ** 4)
    np.testing.assert_allclose(ex.right, v ** 4)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_expansion_matches_all_tuple_oracle(rng, n, m):
    mat = random_factored(rng, 4, 5, n)
    ex = expand_factorization(mat, m)
    np.testing.assert_allclose(ex.left @ ex.right, all_tuples_power(mat.left, mat.right, m),
                               rtol=1e-10, atol=1e-10)


def test_expansion_log_domain():
    rng = np.random.default_rng(3)
    left = 1e40 * rng.standard_normal((4, 2))
    right = 1e-40 * rng.standard_normal((2, 5))
    ex = expand_factorization(RankFactoredMatrix(left, right), 20)
    assert np.all(np.isfinite(ex.left)) and np.all(np.isfinite(ex.right))
    target = (left @ right) ** 20
    assert np.linalg.norm(ex.left @ ex.right - target) <= 1e-10 * np.linalg.norm(target)


def test_expansion_overflow_reported():
    mat = RankFactoredMatrix(1e30 * np.ones((2, 2)), np.ones((2, 2)))
    with pytest.raises(ReconstructionMismatch):
        expand_factorization(mat, 40)


def test_numerical_rank_examples(rng):
    assert numerical_rank(np.eye(3)) == 3
    assert numerical_rank(np.outer(rng.standard_normal(5), rng.standard_normal(4))) == 1
    assert numerical_rank(hadamard_power(np.array([[1.0, 2.0], [3.0, 4.0]]), 2)) == 2
    assert numerical_rank(np.zeros((3, 3))) == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 10 ** 6))
def test_rank_of_power_bounded(n, m, seed):
    rng = np.random.default_rng(seed)
    mat = random_factored(rng, 12, 15, n)
    bound = math.comb(n + m - 1, m)
    ex = expand_factorization(mat, m)
    assert ex.inner_dim == bound
    assert numerical_rank(hadamard_power(mat, m)) <= min(12, 15, bound)


@settings(max_examples=200, deadline=None)
@given(instances())
def test_round_trip_equals_moment_ratio(inst):
    mat, _ = instance_to_matrix(inst)
    assert condition_iii_ratio(mat, inst.p).ratio == pytest.approx(moment_ratio(inst), rel=1e-12)


def test_condition_iii_below_constant(rng):
    for _ in range(300):
        inst = random_instance(rng)
        mat, _ = instance_to_matrix(inst)
        assert condition_iii_ratio(mat, inst.p).ratio <= c_np(inst.dimension, inst.p) * (1 + 1e-9)


def test_balanced_factorization_same_matrix_and_inner_dim(rng):
    for k, l, n in [(5, 7, 3), (2, 9, 4), (1, 1, 4), (6, 6, 1)]:
        mat = RankFactoredMatrix(rng.standard_normal((k, n)), rng.standard_normal((n, l)))
        bal = balanced_factorization(mat)
        assert bal.inner_dim == n
        np.testing.assert_allclose(bal.left @ bal.right, mat.entries, rtol=0, atol=1e-13 * np.abs(mat.entries).max())
        assert expand_factorization(bal, 3).inner_dim == math.comb(n + 2, 3)


def test_cancelling_factors_need_balancing():
    # one entry that is a near-cancelling sum of four products
    left = np.array([[0.3, -0.3, 0.3, -0.3]])
    right = np.array([[1.0], [1.0 - 1e-3], [1.0], [1.0 - 1e-3 + 1e-5]])
    mat = RankFactoredMatrix(left, right)
    with pytest.raises(ReconstructionMismatch):
        expand_factorization(mat, 5)
    expanded = expand_factorization(balanced_factorization(mat), 5)
    assert expanded.inner_dim == math.comb(8, 5)
    assert expanded.entries[0, 0] == pytest.approx(mat.entries[0, 0] ** 5, rel=1e-12)
