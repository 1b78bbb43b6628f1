"""General linear programs, optimality certificates and the generic solve path.

A :class:`LinearProgram` reads::

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                lb <= x <= ub

Multipliers follow the convention ``lam_ub >= 0`` and
``c + A_ub.T @ lam_ub + A_eq.T @ lam_eq = z_lower - z_upper`` with
``z_lower, z_upper >= 0`` the bound multipliers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from ..errors import ConfigurationError
from .simplex import (
    INFEASIBLE,
    ITERATION_LIMIT,
    OPTIMAL,
    STATUSES,
    UNBOUNDED,
    DenseColumns,
    bounded_simplex,
)

DEFAULT_TOLERANCE = 1e-8
DEFAULT_MAX_ITERATIONS = 100_000
# Above this many dense entries the generic path refuses to materialize the LP.
_DENSE_LIMIT = 20_000_000


def _csr(A, n: int) -> sp.csr_matrix:
    if A is None:
        return sp.csr_matrix((0, n))
    return sp.csr_matrix(A, dtype=float)


@dataclass(frozen=True, eq=False)
class LinearProgram:
    c: np.ndarray
    A_ub: sp.csr_matrix | None = None
    b_ub: np.ndarray | None = None
    A_eq: sp.csr_matrix | None = None
    b_eq: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None
    variable_map: Mapping[str, slice] = field(default_factory=dict)
    name: str = "lp"
    structure: object = field(default=None, repr=False)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        n = c.size
        A_ub, A_eq = _csr(self.A_ub, n), _csr(self.A_eq, n)
        b_ub = np.zeros(0) if self.b_ub is None else np.asarray(self.b_ub, dtype=float).reshape(-1)
        b_eq = np.zeros(0) if self.b_eq is None else np.asarray(self.b_eq, dtype=float).reshape(-1)
        lb = np.zeros(n) if self.lb is None else np.broadcast_to(np.asarray(self.lb, dtype=float), (n,)).copy()
        ub = np.full(n, np.inf) if self.ub is None else np.broadcast_to(np.asarray(self.ub, dtype=float), (n,)).copy()
        if A_ub.shape != (b_ub.size, n) or A_eq.shape != (b_eq.size, n):
            raise ConfigurationError(
                f"constraint shapes {A_ub.shape}/{A_eq.shape} do not match "
                f"{b_ub.size}/{b_eq.size} right-hand sides and {n} variables")
        for name, arr in (("c", c), ("A_ub", A_ub.data), ("b_ub", b_ub), ("A_eq", A_eq.data), ("b_eq", b_eq)):
            if not np.all(np.isfinite(arr)):
                raise ConfigurationError(f"LP data {name} contains non-finite values")
        if np.any(np.isnan(lb)) or np.any(np.isnan(ub)) or np.any(lb > ub):
            raise ConfigurationError("variable bounds must satisfy lb <= ub")
        if np.any(lb == np.inf) or np.any(ub == -np.inf):
            raise ConfigurationError("variable bounds exclude every value")
        if self.variable_map:
            covered = np.zeros(n, dtype=int)
            for s in self.variable_map.values():
                covered[s] += 1
            if not np.all(covered == 1):
                raise ConfigurationError("variable_map must partition the LP variables")
        for attr, val in (("c", c), ("A_ub", A_ub), ("b_ub", b_ub), ("A_eq", A_eq),
                          ("b_eq", b_eq), ("lb", lb), ("ub", ub)):
            if isinstance(val, np.ndarray):
                val.setflags(write=False)
            object.__setattr__(self, attr, val)

    @property
    def n_variables(self) -> int:
        return self.c.size

    @property
    def n_inequalities(self) -> int:
        return self.b_ub.size

    @property
    def n_equalities(self) -> int:
        return self.b_eq.size

    def part(self, x: np.ndarray, name: str) -> np.ndarray:
        return np.asarray(x)[self.variable_map[name]]

    def objective(self, x) -> float:
        return float(self.c @ np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Certificate:
    """Scaled optimality residuals of a primal/dual pair."""

    primal_residual: float
    dual_residual: float
    gap: float
    complementarity: float

    def max_residual(self) -> float:
        return max(self.primal_residual, self.dual_residual, self.gap, self.complementarity)

    def satisfied(self, tol: float) -> bool:
        return self.max_residual() <= tol

    def to_dict(self) -> dict:
        return {"primal_residual": self.primal_residual, "dual_residual": self.dual_residual,
                "gap": self.gap, "complementarity": self.complementarity}


@dataclass(frozen=True, eq=False)
class LpSolution:
    values: np.ndarray
    objective_value: float
    status: str
    certificate: Certificate | None = None
    lam_ub: np.ndarray | None = None
    lam_eq: np.ndarray | None = None
    iterations: int = 0

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown LP status {self.status!r}")

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _bound_multipliers(r, lb, ub):
    z_l = np.where(np.isfinite(lb), np.maximum(r, 0.0), 0.0)
    z_u = np.where(np.isfinite(ub), np.maximum(-r, 0.0), 0.0)
    return z_l, z_u


def certificate(lp: LinearProgram, x, lam_ub, lam_eq) -> Certificate:
    """Primal/dual feasibility, duality gap and complementarity, each relative.

    Residuals are divided by ``1 + max|rhs|`` (primal), ``1 + max|c|``
    (dual) and ``1 + |objective|`` (gap and complementarity).
    """
    x = np.asarray(x, dtype=float)
    lam_ub = np.asarray(lam_ub, dtype=float)
    lam_eq = np.asarray(lam_eq, dtype=float)
    slack = lp.b_ub - lp.A_ub @ x
    eq_res = lp.A_eq @ x - lp.b_eq
    r = lp.c + lp.A_ub.T @ lam_ub + lp.A_eq.T @ lam_eq
    return certificate_from_products(lp.c, lp.b_ub, lp.b_eq, lp.lb, lp.ub, x, lam_ub, lam_eq,
                                     slack, eq_res, r)


def certificate_from_products(c, b_ub, b_eq, lb, ub, x, lam_ub, lam_eq, slack, eq_res, r) -> Certificate:
    """Certificate from precomputed ``slack = b_ub - A_ub x``, ``eq_res = A_eq x - b_eq``
    and ``r = c + A_ub' lam_ub + A_eq' lam_eq``; lets structured problems skip
    the explicit matrices.
    """
    lb0 = np.where(np.isfinite(lb), lb, 0.0)
    ub0 = np.where(np.isfinite(ub), ub, 0.0)
    viol = [0.0]
    if slack.size:
        viol.append(float(np.max(-slack)))
    if eq_res.size:
        viol.append(float(np.max(np.abs(eq_res))))
    viol.append(float(np.max(np.where(np.isfinite(lb), lb - x, 0.0), initial=0.0)))
    viol.append(float(np.max(np.where(np.isfinite(ub), x - ub, 0.0), initial=0.0)))
    rhs_scale = 1.0 + max(float(np.max(np.abs(b_ub), initial=0.0)),
                          float(np.max(np.abs(b_eq), initial=0.0)),
                          float(np.max(np.abs(lb0), initial=0.0)),
                          float(np.max(np.abs(ub0), initial=0.0)))
    primal = max(viol) / rhs_scale

    z_l, z_u = _bound_multipliers(r, lb, ub)
    dual_viol = np.abs(r - z_l + z_u)
    dual = max(float(np.max(dual_viol, initial=0.0)),
               float(np.max(-lam_ub, initial=0.0))) / (1.0 + float(np.max(np.abs(c), initial=0.0)))

    pobj = float(c @ x)
    dobj = -float(b_ub @ lam_ub) - float(b_eq @ lam_eq) + float(lb0 @ z_l) - float(ub0 @ z_u)
    obj_scale = 1.0 + abs(pobj)
    gap = abs(pobj - dobj) / obj_scale
    comp = [0.0]
    if slack.size:
        comp.append(float(np.max(np.abs(np.maximum(lam_ub, 0.0) * slack))))
    comp.append(float(np.max(z_l * np.abs(x - lb0), initial=0.0)))
    comp.append(float(np.max(z_u * np.abs(ub0 - x), initial=0.0)))
    return Certificate(primal, dual, gap, max(comp) / obj_scale)


def _standard_form(lp: LinearProgram):
    """Shift/split variables to ``0 <= x'`` and add slacks to inequality rows.

    Returns the dense standard-form data and a recovery map
    ``x = offset + T @ x'[:n_struct]``.
    """
    n = lp.n_variables
    lb, ub = lp.lb, lp.ub
    cols_T = []  # (original var, sign) per standard column
    offset = np.zeros(n)
    upper = []
    for i in range(n):
        if np.isfinite(lb[i]):
            offset[i] = lb[i]
            cols_T.append((i, 1.0))
            upper.append(ub[i] - lb[i])
        elif np.isfinite(ub[i]):
            offset[i] = ub[i]
            cols_T.append((i, -1.0))
            upper.append(np.inf)
        else:
            cols_T.append((i, 1.0))
            upper.append(np.inf)
            cols_T.append((i, -1.0))
            upper.append(np.inf)
    ns = len(cols_T)
    T = np.zeros((n, ns))
    for k, (i, s) in enumerate(cols_T):
        T[i, k] = s
    m_ub, m_eq = lp.n_inequalities, lp.n_equalities
    m = m_ub + m_eq
    if m * (ns + m_ub) > _DENSE_LIMIT:
        raise ConfigurationError("LP too large for the dense generic path")
    A_ub = lp.A_ub.toarray() @ T
    A_eq = lp.A_eq.toarray() @ T
    A = np.zeros((m, ns + m_ub))
    A[:m_ub, :ns] = A_ub
    A[:m_ub, ns:] = np.eye(m_ub)
    A[m_ub:, :ns] = A_eq
    b = np.concatenate([lp.b_ub - lp.A_ub @ offset, lp.b_eq - lp.A_eq @ offset])
    c = np.concatenate([T.T @ lp.c, np.zeros(m_ub)])
    u = np.concatenate([np.array(upper, dtype=float), np.full(m_ub, np.inf)])
    return A, b, c, u, T, offset


def solve_lp(lp: LinearProgram, tolerance: float = DEFAULT_TOLERANCE,
             max_iterations: int = DEFAULT_MAX_ITERATIONS, method: str = "auto") -> LpSolution:
    """Solve ``lp`` and attach an optimality certificate.

    ``method="auto"`` uses the problem's structured solver when it carries
    one (see :mod:`leadsteer.lp.l1l1`) and the dense simplex otherwise;
    ``"dense"`` forces the generic path.
    """
    if method not in ("auto", "dense"):
        raise ConfigurationError(f"unknown LP method {method!r}")
    if method == "auto" and lp.structure is not None:
        return lp.structure.solve_program(lp, tolerance, max_iterations)
    A, b, c, u, T, offset = _standard_form(lp)
    if A.shape[0] == 0:
        # no rows: each variable sits at its cheaper bound
        n = lp.n_variables
        x = np.where(lp.c > 0, lp.lb, np.where(lp.c < 0, lp.ub, np.where(np.isfinite(lp.lb), lp.lb, np.minimum(lp.ub, 0.0))))
        if not np.all(np.isfinite(x)):
            return LpSolution(np.full(n, np.nan), -math.inf, UNBOUNDED)
        cert = certificate(lp, x, np.zeros(0), np.zeros(0))
        return LpSolution(x, lp.objective(x), OPTIMAL, cert, np.zeros(0), np.zeros(0))
    res = bounded_simplex(DenseColumns(A), c, b, u, tol=tolerance * 1e-1, max_iter=max_iterations)
    ns = T.shape[1]
    x = offset + T @ res.x[:ns]
    if res.status != OPTIMAL:
        obj = -math.inf if res.status == UNBOUNDED else math.nan
        return LpSolution(x, obj, res.status, iterations=res.iterations)
    m_ub = lp.n_inequalities
    lam_ub = np.maximum(-res.duals[:m_ub], 0.0)
    lam_eq = -res.duals[m_ub:]
    cert = certificate(lp, x, lam_ub, lam_eq)
    return LpSolution(x, lp.objective(x), OPTIMAL, cert, lam_ub, lam_eq, res.iterations)


__all__ = [
    "Certificate", "LinearProgram", "LpSolution", "certificate", "solve_lp",
    "DEFAULT_TOLERANCE", "DEFAULT_MAX_ITERATIONS",
    "OPTIMAL", "INFEASIBLE", "UNBOUNDED", "ITERATION_LIMIT",
]
