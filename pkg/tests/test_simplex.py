import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.optimize import linprog

from leadsteer.lp.simplex import (
    INFEASIBLE,
    ITERATION_LIMIT,
    OPTIMAL,
    UNBOUNDED,
    DenseColumns,
    bounded_simplex,
    warm_simplex,
)


def _random_standard(rng, m, n, boxed_fraction=0.5):
    A = rng.normal(size=(m, n))
    x0 = rng.uniform(0, 1, size=n)
    b = A @ x0
    upper = np.where(rng.random(n) < boxed_fraction, rng.uniform(1, 3, size=n), np.inf)
    c = rng.normal(size=n)
    # keep the problem bounded by making the cost positive on unboxed columns
    c = np.where(np.isinf(upper), np.abs(c) + 0.1, c)
    return A, b, c, upper


def _oracle(A, b, c, upper):
    bounds = [(0, None if np.isinf(u) else u) for u in upper]
    return linprog(c, A_eq=A, b_eq=b, bounds=bounds, method="highs")


@given(st.integers(0, 2**31), st.integers(1, 6), st.integers(2, 10))
def test_primal_matches_highs(seed, m, extra):
    rng = np.random.default_rng(seed)
    A, b, c, upper = _random_standard(rng, m, m + extra)
    res = bounded_simplex(DenseColumns(A), c, b, upper)
    ref = _oracle(A, b, c, upper)
    assert res.status == OPTIMAL and ref.status == 0
    assert_allclose(res.objective, ref.fun, rtol=1e-8, atol=1e-8)
    assert_allclose(A @ res.x, b, atol=1e-8)
    assert np.all(res.x >= 0) and np.all(res.x <= upper)


@given(st.integers(0, 2**31), st.integers(1, 6), st.integers(2, 10))
def test_warm_start_from_slack_basis_matches(seed, m, extra):
    rng = np.random.default_rng(seed)
    A, b, c, upper = _random_standard(rng, m, m + extra)
    n = A.shape[1]
    # append identity surplus columns so a trivially nonsingular basis exists
    Aw = np.hstack([A, np.eye(m), -np.eye(m)])
    cw = np.concatenate([c, np.full(2 * m, 1e3)])
    uw = np.concatenate([upper, np.full(2 * m, np.inf)])
    basis = np.arange(n, n + m)
    res = warm_simplex(DenseColumns(Aw), cw, b, uw, basis, np.zeros(n + 2 * m, dtype=bool))
    ref = _oracle(Aw, b, cw, uw)
    assert res.status == OPTIMAL
    assert_allclose(res.objective, ref.fun, rtol=1e-8, atol=1e-8)


def test_infeasible_and_unbounded():
    A = np.array([[1.0, 1.0]])
    res = bounded_simplex(DenseColumns(A), np.zeros(2), np.array([5.0]), np.array([1.0, 1.0]))
    assert res.status == INFEASIBLE
    A = np.array([[1.0, -1.0]])
    res = bounded_simplex(DenseColumns(A), np.array([-1.0, 0.0]), np.array([0.0]), np.full(2, np.inf))
    assert res.status == UNBOUNDED


def test_iteration_limit():
    rng = np.random.default_rng(1)
    A, b, c, upper = _random_standard(rng, 6, 20)
    res = bounded_simplex(DenseColumns(A), c, b, upper, max_iter=1)
    assert res.status == ITERATION_LIMIT


def test_result_is_deterministic():
    rng = np.random.default_rng(2)
    A, b, c, upper = _random_standard(rng, 5, 12)
    r1 = bounded_simplex(DenseColumns(A), c, b, upper)
    r2 = bounded_simplex(DenseColumns(A.copy()), c.copy(), b.copy(), upper.copy())
    assert np.array_equal(r1.x, r2.x) and np.array_equal(r1.basis, r2.basis)


def test_degenerate_problem_terminates():
    # many ties at the origin
    m, n = 6, 14
    rng = np.random.default_rng(3)
    A = np.hstack([np.eye(m), rng.integers(-1, 2, size=(m, n - m)).astype(float)])
    b = np.zeros(m)
    c = -np.ones(n)
    upper = np.ones(n)
    res = bounded_simplex(DenseColumns(A), c, b, upper)
    ref = _oracle(A, b, c, upper)
    assert res.status == OPTIMAL
    assert_allclose(res.objective, ref.fun, atol=1e-9)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        bounded_simplex(DenseColumns(np.eye(2)), np.zeros(3), np.zeros(2), np.ones(2))
