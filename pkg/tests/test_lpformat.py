import re
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose

from leadsteer.lp import LinearProgram, build_l1l1_lp, format_lp, solve_lp, write_lp

from conftest import random_system

FIXTURES = Path(__file__).parent / "fixtures"


def _tiny():
    return LinearProgram(
        c=[1.5, -1.0, 0.0],
        A_ub=[[1.0, 2.0, 0.0], [-1.0, 0.0, 0.1]], b_ub=[4.0, 0.25],
        A_eq=[[1.0, -1.0, -1.0]], b_eq=[0.0],
        lb=[-np.inf, -np.inf, -1.0], ub=[3.0, np.inf, np.inf],
        variable_map={"y": slice(0, 2), "slack": slice(2, 3)}, name="tiny",
    )


def test_matches_fixture():
    assert format_lp(_tiny()) == (FIXTURES / "tiny.lp").read_text()


def test_write(tmp_path):
    path = tmp_path / "tiny.lp"
    write_lp(_tiny(), path)
    assert path.read_text() == format_lp(_tiny())


_TERM = re.compile(r"([+-])?\s*(\d[0-9.eE+-]*)?\s*x(\d+)")


def _parse_row(line: str, n: int) -> tuple[np.ndarray, float]:
    body = line.split(":", 1)[1]
    lhs, rhs = re.split(r"<=|=", body)
    row = np.zeros(n)
    for sign, coef, j in _TERM.findall(lhs):
        v = float(coef) if coef else 1.0
        row[int(j)] = -v if sign == "-" else v
    return row, float(rhs)


def test_coefficients_round_trip_exactly(rng):
    lp = build_l1l1_lp(random_system(rng, k=3, m=2), 0.0123, 0.3)
    lines = format_lp(lp).splitlines()
    rows = [ln for ln in lines if ln.startswith(" u")]
    assert len(rows) == lp.n_inequalities
    dense = lp.A_ub.toarray()
    for i, line in enumerate(rows):
        row, rhs = _parse_row(line, lp.n_variables)
        assert np.array_equal(row, dense[i])
        assert rhs == lp.b_ub[i]


def test_external_solver_reads_the_dump(tmp_path, rng):
    highspy = pytest.importorskip("highspy")
    for _ in range(5):
        lp = build_l1l1_lp(random_system(rng, k=4, m=6), 10 ** rng.uniform(-3, 0), rng.uniform(0, 1))
        path = tmp_path / "l1l1.lp"
        write_lp(lp, path)
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.readModel(str(path))
        h.run()
        ours = solve_lp(lp).objective_value
        assert_allclose(h.getInfo().objective_function_value, ours, rtol=1e-8)
    tiny = tmp_path / "tiny.lp"
    write_lp(_tiny(), tiny)
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.readModel(str(tiny))
    h.run()
    assert_allclose(h.getInfo().objective_function_value, solve_lp(_tiny()).objective_value, rtol=1e-9)
