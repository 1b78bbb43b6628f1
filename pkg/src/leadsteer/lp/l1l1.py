"""L1-regularized L1 fitting with a censored nuisance term, as a linear program.

The problem, for currents ``y`` of length K::

    minimize  |l1 @ y - x1|_1 + sum(max(|l2 @ y / nu|, eps)) + alpha * zeta * |y|_1
    s.t.      |y_k| <= per_contact,  |y|_1 <= total_budget,  sum(y) = 0

with ``nu = max|x1|`` and ``zeta`` the largest absolute column sum of
``[l1; l2]``. :func:`build_l1l1_lp` writes the epigraph LP over
``[y+, y-, t, s]``. The nuisance block makes that LP tall (tens of
thousands of rows) while its dual has only 2K rows, so
:class:`L1L1Session` solves the dual with the simplex engine and reads the
currents off the dual's row multipliers. The session keeps the
final basis between calls; when only ``eps`` changes the old basis stays
primal feasible, which makes lattice scans cheap.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import ConfigurationError, DegenerateTargetError, LpStatusError
from ..model import PER_CONTACT_BOUND_MA, TOTAL_BUDGET_MA, CurrentPattern, fit_to_bounds
from .program import (
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE,
    LinearProgram,
    LpSolution,
    certificate_from_products,
)
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, warm_simplex

log = logging.getLogger(__name__)

# The dual has one column per nuisance row, so per-column reduced-cost slack
# adds up in the duality gap; the engine runs well inside the requested tolerance.
ENGINE_TOLERANCE_FACTOR = 1e-3


def _check_params(alpha: float, epsilon: float):
    if not (np.isfinite(alpha) and alpha >= 0):
        raise ConfigurationError(f"alpha must be finite and nonnegative, got {alpha!r}")
    if not (0.0 <= epsilon <= 1.0):
        raise ConfigurationError(f"epsilon must lie in [0, 1], got {epsilon!r}")


def target_scale(system) -> float:
    nu = float(np.max(np.abs(system.x1)))
    if nu == 0.0:
        raise DegenerateTargetError("target vector is zero; the nuisance scaling is undefined")
    if not np.isfinite(nu):
        raise ConfigurationError("target vector is not finite")
    return nu


def column_sum_norm(system) -> float:
    """Largest absolute column sum of ``[l1; l2]``."""
    zeta = float(np.max(np.abs(system.l1).sum(axis=0) + np.abs(system.l2).sum(axis=0)))
    if not np.isfinite(zeta):
        raise ConfigurationError("lead field column sums are not finite")
    return zeta


def l1l1_objective(system, y, alpha: float, epsilon: float) -> float:
    """Direct evaluation of the nonsmooth objective at currents ``y``."""
    y = np.asarray(y, dtype=float)
    nu = target_scale(system)
    fit = float(np.sum(np.abs(system.l1 @ y - system.x1)))
    nuis = float(np.sum(np.maximum(np.abs(system.l2 @ y) / nu, epsilon)))
    return fit + nuis + alpha * column_sum_norm(system) * float(np.sum(np.abs(y)))


class _Template:
    """Constraint data shared by every (alpha, eps) instance on one system."""

    def __init__(self, system, per_contact: float, total_budget: float):
        self.system = system
        self.per_contact = float(per_contact)
        self.total_budget = float(total_budget)
        if not (self.per_contact > 0 and self.total_budget > 0):
            raise ConfigurationError("current bounds must be positive")
        self.nu = target_scale(system)
        self.zeta = column_sum_norm(system)
        B = np.asarray(system.l1, dtype=float)
        A = np.asarray(system.l2, dtype=float) / self.nu
        self.B, self.A = B, A
        self.x1 = np.asarray(system.x1, dtype=float)
        n1, k = B.shape
        m = A.shape[0]
        self.k, self.n1, self.m = k, n1, m
        Bs, As = sp.csr_matrix(B), sp.csr_matrix(A)
        I1, Im, Ik = sp.identity(n1, format="csr"), sp.identity(m, format="csr"), sp.identity(k, format="csr")
        ones = sp.csr_matrix(np.ones((1, k)))
        Z = None
        self.A_ub = sp.bmat([
            [Bs, -Bs, -I1, Z],
            [-Bs, Bs, -I1, Z],
            [As, -As, Z, -Im],
            [-As, As, Z, -Im],
            [Ik, Ik, Z, Z],
            [ones, ones, Z, Z],
        ], format="csr", dtype=float)
        # bmat drops an all-None column block when n1 or m has no rows; pad explicitly
        n_var = 2 * k + n1 + m
        if self.A_ub.shape[1] != n_var:
            raise ConfigurationError("empty target or nuisance block")
        self.b_ub = np.concatenate([self.x1, -self.x1, np.zeros(2 * m),
                                    np.full(k, self.per_contact), [self.total_budget]])
        self.A_eq = sp.csr_matrix(np.concatenate([np.ones(k), -np.ones(k), np.zeros(n1 + m)])[None, :])
        self.b_eq = np.zeros(1)
        self.variable_map = {
            "y_plus": slice(0, k),
            "y_minus": slice(k, 2 * k),
            "t": slice(2 * k, 2 * k + n1),
            "s": slice(2 * k + n1, n_var),
        }
        self.n_var = n_var

    def program(self, alpha: float, epsilon: float, structure=None) -> LinearProgram:
        k, n1, m = self.k, self.n1, self.m
        c = np.concatenate([np.full(2 * k, alpha * self.zeta), np.ones(n1 + m)])
        lb = np.concatenate([np.zeros(2 * k + n1), np.full(m, float(epsilon))])
        return LinearProgram(c, self.A_ub, self.b_ub, self.A_eq, self.b_eq, lb, None,
                             self.variable_map, name=f"l1l1(alpha={alpha!r}, eps={epsilon!r})",
                             structure=structure)


@dataclass(frozen=True)
class _Structure:
    session: "L1L1Session"
    alpha: float
    epsilon: float

    def solve_program(self, lp, tolerance, max_iterations):
        sess = L1L1Session(self.session.system, self.session.per_contact, self.session.total_budget,
                           tolerance=tolerance, max_iterations=max_iterations, template=self.session.template)
        return sess.solve(self.alpha, self.epsilon, warm=False).solution


def build_l1l1_lp(system, alpha: float, epsilon: float, per_contact: float = PER_CONTACT_BOUND_MA,
                  total_budget: float = TOTAL_BUDGET_MA) -> LinearProgram:
    """Epigraph LP with variables ``[y+ (K), y- (K), t (N1), s (M)]``.

    The nuisance floor ``s >= eps`` is a variable bound; residual epigraphs
    carry ``t >= 0``. ``solve_lp`` on the result dispatches to the dual
    solver automatically.
    """
    _check_params(alpha, epsilon)
    session = L1L1Session(system, per_contact, total_budget)
    return session.template.program(alpha, epsilon, _Structure(session, alpha, epsilon))


class DualColumns:
    """Columns of the dual LP, generated from the blocks ``B = l1`` and ``A = l2 / nu``.

    Variables: ``[a (N1), b (N1), e (M), f (M), g (K), h, q+, q-, r+ (K), r- (K)]``;
    rows: ``[+ (K), - (K)]``, one pair per contact. Column ``a_i`` is
    ``[B_i; -B_i]``, ``b_i`` its negative, likewise ``e_m``/``f_m`` with
    ``A_m``; ``g_k`` is ``[u_k; u_k]``, ``h`` all ones, ``q+`` is
    ``[1; -1]``, and ``r+``/``r-`` are negated unit columns (surplus).
    """

    def __init__(self, B: np.ndarray, A: np.ndarray):
        self.B = np.ascontiguousarray(B)
        self.A = np.ascontiguousarray(A)
        self.AT = np.ascontiguousarray(A.T)
        self.BT = np.ascontiguousarray(B.T)
        n1, k = B.shape
        mm = A.shape[0]
        self.k, self.n1, self.mm = k, n1, mm
        self.o_a, self.o_b = 0, n1
        self.o_e, self.o_f = 2 * n1, 2 * n1 + mm
        self.o_g = 2 * n1 + 2 * mm
        self.o_h = self.o_g + k
        self.o_qp, self.o_qm = self.o_h + 1, self.o_h + 2
        self.o_rp = self.o_h + 3
        self.o_rm = self.o_rp + k
        self.n = self.o_rm + k
        self.m = 2 * k

    def column(self, j: int) -> np.ndarray:
        k = self.k
        col = np.zeros(2 * k)
        if j < self.o_b:
            v = self.B[j]
            col[:k], col[k:] = v, -v
        elif j < self.o_e:
            v = self.B[j - self.o_b]
            col[:k], col[k:] = -v, v
        elif j < self.o_f:
            v = self.A[j - self.o_e]
            col[:k], col[k:] = v, -v
        elif j < self.o_g:
            v = self.A[j - self.o_f]
            col[:k], col[k:] = -v, v
        elif j < self.o_h:
            i = j - self.o_g
            col[i] = col[k + i] = 1.0
        elif j == self.o_h:
            col[:] = 1.0
        elif j == self.o_qp:
            col[:k], col[k:] = 1.0, -1.0
        elif j == self.o_qm:
            col[:k], col[k:] = -1.0, 1.0
        elif j < self.o_rm:
            col[j - self.o_rp] = -1.0
        else:
            col[k + j - self.o_rm] = -1.0
        return col

    def columns(self, idx) -> np.ndarray:
        return np.column_stack([self.column(int(j)) for j in idx])

    def price(self, pi: np.ndarray) -> np.ndarray:
        k = self.k
        d = pi[:k] - pi[k:]
        s = pi[:k] + pi[k:]
        bd = self.B @ d
        ad = self.A @ d
        sd = float(np.sum(d))
        return np.concatenate([bd, -bd, ad, -ad, s, [np.sum(s), sd, -sd], -pi[:k], -pi[k:]])

    def matvec(self, x: np.ndarray) -> np.ndarray:
        k = self.k
        a = x[self.o_a:self.o_b] - x[self.o_b:self.o_e]
        e = x[self.o_e:self.o_f] - x[self.o_f:self.o_g]
        v = self.BT @ a + self.AT @ e + (x[self.o_qp] - x[self.o_qm])
        w = x[self.o_g:self.o_h] + x[self.o_h]
        return np.concatenate([v + w - x[self.o_rp:self.o_rm], -v + w - x[self.o_rm:]])


@dataclass(eq=False)
class L1L1Result:
    currents: np.ndarray
    solution: LpSolution
    iterations: int
    warm_started: bool
    seconds: float
    session: "L1L1Session" = field(repr=False)
    alpha: float = 0.0
    epsilon: float = 0.0
    _program: LinearProgram | None = field(default=None, repr=False)

    @property
    def program(self) -> LinearProgram:
        """The explicit LP this solution belongs to, built on first access."""
        if self._program is None:
            self._program = self.session.template.program(
                self.alpha, self.epsilon, _Structure(self.session, self.alpha, self.epsilon))
        return self._program


class L1L1Session:
    """Repeated L1L1 solves on one system, warm-starting from the previous basis."""

    def __init__(self, system, per_contact: float = PER_CONTACT_BOUND_MA,
                 total_budget: float = TOTAL_BUDGET_MA, tolerance: float = DEFAULT_TOLERANCE,
                 max_iterations: int = DEFAULT_MAX_ITERATIONS, template: _Template | None = None):
        self.system = system
        self.per_contact = float(per_contact)
        self.total_budget = float(total_budget)
        self.tolerance = float(tolerance)
        self.max_iterations = int(max_iterations)
        self.template = template if template is not None else _Template(system, per_contact, total_budget)
        t = self.template
        self.cols = DualColumns(t.B, t.A)
        self.upper = np.concatenate([np.ones(self.cols.o_g), np.full(self.cols.n - self.cols.o_g, np.inf)])
        self._basis = None
        self._at_upper = None

    def _costs(self, epsilon: float) -> np.ndarray:
        t, cols = self.template, self.cols
        return np.concatenate([t.x1, -t.x1, np.full(2 * cols.mm, float(epsilon)),
                               np.full(cols.k, t.per_contact), [t.total_budget],
                               np.zeros(2 + 2 * cols.k)])

    def cold_basis(self):
        return np.arange(self.cols.o_rp, self.cols.n), np.zeros(self.cols.n, dtype=bool)

    def reset(self):
        self._basis = self._at_upper = None

    def solve(self, alpha: float, epsilon: float, warm: bool = True) -> L1L1Result:
        _check_params(alpha, epsilon)
        start = time.perf_counter()
        t, cols = self.template, self.cols
        rhs = np.full(cols.m, -alpha * t.zeta)
        c = self._costs(epsilon)
        warm_used = warm and self._basis is not None
        if warm_used:
            basis, at_upper = self._basis, self._at_upper
        else:
            basis, at_upper = self.cold_basis()
        res = warm_simplex(cols, c, rhs, self.upper, basis, at_upper,
                           tol=self.tolerance * ENGINE_TOLERANCE_FACTOR, max_iter=self.max_iterations)
        k = cols.k
        n_var = t.n_var
        if res.status != OPTIMAL:
            # the primal always has y = 0 feasible, so only the iteration limit can occur
            status = {UNBOUNDED: INFEASIBLE, INFEASIBLE: UNBOUNDED}.get(res.status, res.status)
            sol = LpSolution(np.full(n_var, np.nan), np.nan, status, iterations=res.iterations)
            self.reset()
            return L1L1Result(np.full(k, np.nan), sol, res.iterations, warm_used,
                              time.perf_counter() - start, self, alpha, epsilon)
        self._basis, self._at_upper = res.basis, res.at_upper
        pi = res.duals
        y = np.maximum(pi[:k], 0.0) - np.maximum(pi[k:], 0.0)
        x = self._primal_point(y, epsilon)
        lam_ub, lam_eq = self._multipliers(res.x)
        cert, objective = self._certificate(alpha, epsilon, x, lam_ub, lam_eq)
        sol = LpSolution(x, objective, OPTIMAL, cert, lam_ub, lam_eq, res.iterations)
        if not cert.satisfied(self.tolerance):
            log.warning("L1L1 certificate above tolerance at alpha=%r eps=%r: %s",
                        alpha, epsilon, cert.to_dict())
        return L1L1Result(y, sol, res.iterations, warm_used, time.perf_counter() - start,
                          self, alpha, epsilon)

    def _certificate(self, alpha, epsilon, x, lam_ub, lam_eq):
        """Same residuals as :func:`certificate` on the explicit LP, computed blockwise."""
        t = self.template
        k, n1, m = t.k, t.n1, t.m
        yp, ym = x[:k], x[k:2 * k]
        tt, ss = x[2 * k:2 * k + n1], x[2 * k + n1:]
        y = yp - ym
        By, Ay = t.B @ y, t.A @ y
        slack = np.concatenate([
            t.x1 - By + tt, -t.x1 + By + tt, ss - Ay, ss + Ay,
            t.per_contact - (yp + ym), [t.total_budget - float(np.sum(yp + ym))],
        ])
        eq_res = np.array([float(np.sum(yp) - np.sum(ym))])
        a, b = lam_ub[:n1], lam_ub[n1:2 * n1]
        e, f = lam_ub[2 * n1:2 * n1 + m], lam_ub[2 * n1 + m:2 * n1 + 2 * m]
        g, h = lam_ub[2 * n1 + 2 * m:2 * n1 + 2 * m + k], lam_ub[-1]
        q = lam_eq[0]
        coupling = t.B.T @ (a - b) + t.A.T @ (e - f)
        cy = alpha * t.zeta
        r = np.concatenate([cy + coupling + g + h + q, cy - coupling + g + h - q, 1.0 - a - b, 1.0 - e - f])
        c = np.concatenate([np.full(2 * k, cy), np.ones(n1 + m)])
        lb = np.concatenate([np.zeros(2 * k + n1), np.full(m, float(epsilon))])
        ub = np.full(t.n_var, np.inf)
        cert = certificate_from_products(c, t.b_ub, t.b_eq, lb, ub, x, lam_ub, lam_eq, slack, eq_res, r)
        return cert, float(c @ x)

    def _primal_point(self, y, epsilon):
        t = self.template
        t_part = np.abs(t.B @ y - t.x1)
        s_part = np.maximum(np.abs(t.A @ y), epsilon)
        return np.concatenate([np.maximum(y, 0.0), np.maximum(-y, 0.0), t_part, s_part])

    def _multipliers(self, z):
        cols = self.cols
        ab = z[cols.o_a:cols.o_b] - z[cols.o_b:cols.o_e]
        ef = z[cols.o_e:cols.o_f] - z[cols.o_f:cols.o_g]
        lam_ub = np.concatenate([
            np.maximum(ab, 0.0), np.maximum(-ab, 0.0),
            np.maximum(ef, 0.0), np.maximum(-ef, 0.0),
            z[cols.o_g:cols.o_h], [z[cols.o_h]],
        ])
        lam_eq = np.array([z[cols.o_qp] - z[cols.o_qm]])
        return lam_ub, lam_eq


def extract_pattern(lp: LinearProgram, sol: LpSolution) -> CurrentPattern:
    """Currents ``y+ - y-`` of an optimal solution, re-centred to sum exactly to zero.

    Roundoff beyond the box or budget is removed by a uniform rescale of at
    most a few ulps.
    """
    if sol.status != OPTIMAL:
        raise LpStatusError(sol.status, f"cannot extract currents from {lp.name}")
    y = lp.part(sol.values, "y_plus") - lp.part(sol.values, "y_minus")
    return fit_to_bounds(y, *_bounds_of(lp))


def _bounds_of(lp: LinearProgram) -> tuple[float, float]:
    k = lp.variable_map["y_plus"].stop
    return float(lp.b_ub[-1 - k]), float(lp.b_ub[-1])
