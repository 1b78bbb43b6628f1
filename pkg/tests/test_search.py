import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from leadsteer.errors import ConfigurationError
from leadsteer.model import DecisionVariables, decision_variables
from leadsteer.search import (
    CandidateSolution,
    ParamAxis,
    SearchSpace,
    db_to_linear,
    lattice_search,
    preset,
    select_best,
)
from leadsteer.solvers import SolveOutcome, solve_l1l1, solve_tls
from leadsteer.model import CurrentPattern

from conftest import random_system


def test_db_to_linear():
    assert db_to_linear(0.0) == 1.0
    assert_allclose(db_to_linear(-40.0), 0.01, rtol=1e-15)


def test_presets():
    a = preset("l1l1_a")
    assert (a.param1.min_db, a.param1.max_db, a.param2.min_db, a.param2.max_db) == (-100, -30, -160, 0)
    b = preset("l1l1_b")
    assert (b.param2.min_db, b.param2.max_db) == (-10, 0)
    t = preset("tls_default")
    assert (t.method_tag, t.param1.min_db, t.param1.max_db, t.param2.min_db, t.param2.max_db) == \
        ("tls", -200, -110, -50, 40)
    assert a.shape == (8, 8) and a.size == 64
    with pytest.raises(ConfigurationError):
        preset("l1l1_c")


def test_space_validation():
    with pytest.raises(ConfigurationError):
        ParamAxis("alpha", 0.0, -1.0)
    with pytest.raises(ConfigurationError):
        ParamAxis("alpha", 0.0, 1.0, steps=0)
    with pytest.raises(ConfigurationError):
        SearchSpace("l1l1", ParamAxis("reg", 0, 1), ParamAxis("beta", 0, 1))
    with pytest.raises(ConfigurationError):
        SearchSpace("rp", ParamAxis("alpha", 0, 1), ParamAxis("epsilon", 0, 1))
    assert ParamAxis("alpha", -3, 0, values_db=(-3, -1)).steps == 2


def _cand(i, j, gamma, theta, feasible):
    out = SolveOutcome(CurrentPattern(np.zeros(2)), DecisionVariables(gamma, 1.0, theta), "tls")
    return CandidateSolution(out, (i, j), feasible)


def test_select_best_rules():
    cands = [_cand(1, 0, 1.0, 5.0, True), _cand(0, 1, 1.0, 5.0, True), _cand(0, 0, 9.0, 9.0, False)]
    assert select_best(cands).grid_coordinates == (0, 1)
    infeasible = [_cand(0, 0, 0.1, 50.0, False), _cand(0, 1, 0.5, 1.0, False)]
    best = select_best(infeasible)
    assert best.grid_coordinates == (0, 1) and not best.feasible
    assert select_best(list(reversed(cands))).grid_coordinates == (0, 1)


def test_singleton_lattice_equals_direct_call(rng):
    s = random_system(rng, k=5, m=8)
    space = SearchSpace("l1l1", ParamAxis("alpha", -40, -40, 1), ParamAxis("epsilon", -20, -20, 1))
    res = lattice_search(s, space, gamma0=1e-6)
    direct = solve_l1l1(s, db_to_linear(-40), db_to_linear(-20))
    assert_allclose(res.best.outcome.pattern.currents, direct.pattern.currents, atol=1e-12)


def test_infeasible_fallback(rng):
    s = random_system(rng, k=5, m=8)
    res = lattice_search(s, preset("tls_default", 3), gamma0=1e9)
    assert not res.best.feasible
    assert res.best.outcome.metrics.gamma == max(c.outcome.metrics.gamma for c in res.candidates)


def test_four_by_four_matches_independent_rescan(rng):
    s = random_system(rng, k=6, m=12)
    space = preset("l1l1_a", 4)
    gamma0 = 0.3
    res = lattice_search(s, space, gamma0)
    rows = []
    for i, a in enumerate(space.param1.points_db()):
        for j, e in enumerate(space.param2.points_db()):
            out = solve_l1l1(s, 10 ** (a / 20), 10 ** (e / 20))
            rows.append(((i, j), out.metrics))
    feasible = [(c, m) for c, m in rows if m.gamma >= gamma0]
    pool = feasible or rows
    key = (lambda r: r[1].theta) if feasible else (lambda r: r[1].gamma)
    top = max(key(r) for r in pool)
    expected = min(c for c, m in pool if key((c, m)) == top)
    assert res.best.grid_coordinates == expected
    assert len(res.candidates) == 16


@given(st.integers(0, 2**31))
def test_refinement_never_lowers_best(seed):
    rng = np.random.default_rng(seed)
    s = random_system(rng, k=5, m=10)
    coarse_a, coarse_e = (-90.0, -50.0), (-120.0, -20.0)
    fine_a, fine_e = (-90.0, -70.0, -50.0), (-120.0, -60.0, -20.0, -5.0)
    ax = lambda name, vals: ParamAxis(name, min(vals), max(vals), values_db=vals)
    coarse = lattice_search(s, SearchSpace("l1l1", ax("alpha", coarse_a), ax("epsilon", coarse_e)), 0.1)
    fine = lattice_search(s, SearchSpace("l1l1", ax("alpha", fine_a), ax("epsilon", fine_e)), 0.1)
    if coarse.best.feasible:
        assert fine.best.feasible
        assert fine.best.outcome.metrics.theta >= coarse.best.outcome.metrics.theta


def test_search_is_deterministic_and_consistent(rng):
    s = random_system(rng, k=8, m=20)
    a = lattice_search(s, preset("l1l1_b", 3), 0.5)
    b = lattice_search(s, preset("l1l1_b", 3), 0.5)
    assert a.best.grid_coordinates == b.best.grid_coordinates
    recomputed = decision_variables(s, a.best.outcome.pattern)
    assert a.best.feasible == (recomputed.gamma >= 0.5)


def test_gamma0_must_be_positive(rng):
    with pytest.raises(ConfigurationError):
        lattice_search(random_system(rng), preset("tls_default", 2), 0.0)
