import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from leadsteer.errors import ConfigurationError, ConstraintViolation, DimensionError, InvalidTargetError
from leadsteer.leadfield import system_from_matrices
from leadsteer.model import (
    ContactArray,
    CurrentPattern,
    DofGrid,
    TargetSpec,
    aligned_target,
    decision_variables,
    field_ratio,
    fit_to_bounds,
    focused_density,
    nuisance_density,
    unit,
)

from conftest import random_system

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


def test_focused_density_zero_currents(rng):
    s = random_system(rng)
    assert focused_density(s, np.zeros(4)) == 0.0


def test_focused_density_two_contact_hand_value():
    s = system_from_matrices([[1.0, -1.0]], [[0.5, 0.5]], [1.0])
    assert focused_density(s, np.array([1.0, -1.0])) == 2.0


def test_focused_density_dimension_error(rng):
    s = random_system(rng, k=4)
    with pytest.raises(DimensionError) as exc:
        focused_density(s, np.zeros(3))
    assert exc.value.expected == 4 and exc.value.actual == 3


def test_focused_density_zero_target_rejected():
    s = system_from_matrices([[1.0, 2.0]], [[1.0, 1.0]], [0.0])
    with pytest.raises(InvalidTargetError):
        focused_density(s, np.zeros(2))


def test_nuisance_density_identity_unit_vector():
    k = 5
    s = system_from_matrices(np.ones((1, k)), np.eye(k), [1.0])
    y = np.zeros(k)
    y[0] = 1.0
    assert_allclose(nuisance_density(s, y), 1 / math.sqrt(k), rtol=1e-15)


def test_nuisance_density_matches_naive_accumulation(rng):
    s = random_system(rng, k=3, m=5)
    y = rng.normal(size=3)
    total = 0.0
    for m in range(5):
        acc = 0.0
        for j in range(3):
            acc += s.l2[m, j] * y[j]
        total += acc * acc
    assert_allclose(nuisance_density(s, y), math.sqrt(total / 5), rtol=1e-12)


def test_nuisance_density_empty_region():
    s = system_from_matrices([[1.0, 2.0]], np.zeros((0, 2)), [1.0])
    with pytest.raises(ConfigurationError):
        nuisance_density(s, np.zeros(2))


def test_field_ratio_conventions():
    assert field_ratio(2.42, 1.21) == 2.0
    assert field_ratio(0.0, 0.0) == 0.0
    assert field_ratio(1.0, 0.0) == math.inf
    assert field_ratio(-1.0, 0.0) == -math.inf
    with pytest.raises(ValueError):
        field_ratio(1.0, -1.0)


@given(st.integers(0, 2**31), st.floats(0.01, 100))
def test_homogeneity(seed, c):
    rng = np.random.default_rng(seed)
    s = random_system(rng, k=5, m=6)
    y = rng.normal(size=5)
    a, b = decision_variables(s, y), decision_variables(s, c * y)
    assert_allclose(b.gamma, c * a.gamma, rtol=1e-10, atol=1e-300)
    assert_allclose(b.xi, c * a.xi, rtol=1e-10)
    assert_allclose(b.theta, a.theta, rtol=1e-10)


def test_decision_variables_bit_identical(rng):
    s = random_system(rng, k=8, m=50)
    y = rng.normal(size=8)
    assert decision_variables(s, y) == decision_variables(s, y.copy())


@given(st.lists(finite, min_size=2, max_size=8))
def test_current_pattern_accepts_exactly_the_feasible_vectors(values):
    y = np.array(values)
    feasible = (np.max(np.abs(y)) <= 2.0 * (1 + 1e-9) and np.sum(np.abs(y)) <= 4.0 * (1 + 1e-9)
                and abs(np.sum(y)) <= 1e-9 * 4.0)
    if feasible:
        assert_allclose(CurrentPattern(y).currents, y)
    else:
        with pytest.raises(ConstraintViolation):
            CurrentPattern(y)


@pytest.mark.parametrize("y", [[2.5, -2.5], [2.0, -1.0], [2.0, 2.0, -2.0, -2.0], [np.nan, 0.0]])
def test_current_pattern_rejects(y):
    with pytest.raises(ConstraintViolation):
        CurrentPattern(np.array(y))


def test_current_pattern_is_immutable():
    p = CurrentPattern(np.array([1.0, -1.0]))
    with pytest.raises(ValueError):
        p.currents[0] = 0.0


@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=40),
       st.floats(0.1, 5), st.floats(0.1, 10))
def test_fit_to_bounds_always_feasible(values, p, mu):
    pat = fit_to_bounds(np.array(values), p, mu)
    y = pat.currents
    assert np.max(np.abs(y)) <= p * (1 + 1e-9)
    assert np.sum(np.abs(y)) <= mu * (1 + 1e-9)
    assert abs(np.sum(y)) <= 1e-9 * mu


def test_fit_to_bounds_keeps_feasible_shape(rng):
    y = np.array([0.5, -0.25, -0.25])
    assert_allclose(fit_to_bounds(y).currents, y, atol=1e-16)
    big = np.array([10.0, -4.0, -6.0])
    out = fit_to_bounds(big).currents
    assert_allclose(out / out[0], big / big[0], rtol=1e-12)


def test_target_spec_validation():
    with pytest.raises(InvalidTargetError):
        TargetSpec(np.zeros(3), np.array([1.0, 1.0, 0.0]))
    with pytest.raises(InvalidTargetError):
        TargetSpec(np.zeros(3), np.array([1.0, 0.0, 0.0]), magnitude=0.0)
    with pytest.raises(InvalidTargetError):
        TargetSpec(np.zeros(3), np.array([1.0, 0.0, 0.0]), alignment="sideways")


def test_aligned_target_orientations():
    t = aligned_target([3.0, 4.0, 1.0], "perpendicular")
    assert_allclose(t.orientation, [0.6, 0.8, 0.0], rtol=1e-15)
    assert_allclose(aligned_target([3.0, 4.0, 1.0], "parallel").orientation, [0, 0, 1])
    with pytest.raises(InvalidTargetError):
        aligned_target([0.0, 0.0, 1.0], "perpendicular")
    with pytest.raises(InvalidTargetError):
        aligned_target([1.0, 0.0, 0.0], "custom")


@given(st.tuples(finite, finite, finite).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_unit_norm_within_tolerance(v):
    assert abs(np.linalg.norm(unit(v)) - 1.0) <= 1e-12


def test_grid_validation():
    with pytest.raises(ConfigurationError):
        DofGrid(np.zeros((2, 3)))
    with pytest.raises(ConfigurationError):
        DofGrid(np.zeros((2, 2)))
    g = DofGrid(np.eye(3))
    assert g.n_dof == 9
    assert g.nearest([0.9, 0.1, 0.0])[0] == 0


def test_contact_array_needs_two_unique_contacts():
    d = {"lead_diameter": 1.27, "contacts": [
        {"label": "a", "center": [0.635, 0, 0], "normal": [1, 0, 0], "row": 0, "sector": 0}]}
    with pytest.raises(ConfigurationError):
        ContactArray.from_dict(d)
    d["contacts"].append(dict(d["contacts"][0]))
    with pytest.raises(ConfigurationError):
        ContactArray.from_dict(d)
