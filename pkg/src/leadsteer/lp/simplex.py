"""Bounded-variable revised simplex, primal and dual.

Solves ``min c @ x  s.t.  A @ x = b,  0 <= x <= upper`` where ``upper`` may
contain ``inf``. The constraint matrix is accessed only through a column
source, so structured problems can price columns without materializing ``A``.

Pricing is Dantzig's rule, switching to Bland's smallest-index rule while the
objective stalls. The ratio test is Harris' two-pass test with bound flips.
The basis is refactored from scratch every iteration; at the end the basis is
sorted and refactored once more so the returned point depends only on the
final basis, not on the pivot path.

:func:`warm_simplex` starts from any nonsingular basis with dual simplex
iterations (dual steepest-edge row choice, bound-flipping ratio test) and
finishes with primal iterations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"
STATUSES = (OPTIMAL, INFEASIBLE, UNBOUNDED, ITERATION_LIMIT)

_PIVOT_TOL = 1e-9
_STALL_LIMIT = 30


class DenseColumns:
    """Column source backed by an explicit matrix."""

    def __init__(self, A):
        self.A = np.ascontiguousarray(A, dtype=float)
        self.m, self.n = self.A.shape

    def column(self, j: int) -> np.ndarray:
        return self.A[:, j]

    def columns(self, idx) -> np.ndarray:
        return self.A[:, idx]

    def price(self, pi: np.ndarray) -> np.ndarray:
        """``A.T @ pi``."""
        return self.A.T @ pi

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x


class _WithArtificials:
    """Appends one signed unit column per row for phase 1."""

    def __init__(self, base, signs: np.ndarray):
        self.base = base
        self.signs = signs
        self.m = base.m
        self.n = base.n + base.m

    def column(self, j: int) -> np.ndarray:
        if j < self.base.n:
            return self.base.column(j)
        col = np.zeros(self.m)
        col[j - self.base.n] = self.signs[j - self.base.n]
        return col

    def columns(self, idx) -> np.ndarray:
        return np.column_stack([self.column(j) for j in idx])

    def price(self, pi):
        return np.concatenate([self.base.price(pi), self.signs * pi])

    def matvec(self, x):
        return self.base.matvec(x[: self.base.n]) + self.signs * x[self.base.n:]


@dataclass
class SimplexResult:
    status: str
    x: np.ndarray
    duals: np.ndarray
    reduced_costs: np.ndarray
    objective: float
    iterations: int
    basis: np.ndarray
    at_upper: np.ndarray


class _Run:
    def __init__(self, cols, c, b, upper, basis, at_upper, tol):
        self.cols, self.c, self.b, self.u = cols, c, b, upper
        self.basis = np.array(basis, dtype=np.int64)
        self.at_upper = np.array(at_upper, dtype=bool)
        self.is_basic = np.zeros(cols.n, dtype=bool)
        self.is_basic[self.basis] = True
        self.at_upper[self.is_basic] = False
        self.fixed = upper <= 0.0
        self.ftol = tol * (1.0 + float(np.max(np.abs(b), initial=0.0)))
        self.dtol = tol * (1.0 + float(np.max(np.abs(c), initial=0.0)))
        self.Bmat = np.array(cols.columns(self.basis), dtype=float).reshape(cols.m, cols.m)

    def nonbasic_values(self) -> np.ndarray:
        x = np.zeros(self.cols.n)
        up = self.at_upper & ~self.is_basic
        x[up] = self.u[up]
        return x

    def factor(self):
        self.lu = lu_factor(self.Bmat, check_finite=False)

    def primal(self):
        x = self.nonbasic_values()
        xb = lu_solve(self.lu, self.b - self.cols.matvec(x), check_finite=False)
        x[self.basis] = xb
        return x, xb

    def duals(self):
        pi = lu_solve(self.lu, self.c[self.basis], trans=1, check_finite=False)
        return pi, self.c - self.cols.price(pi)

    def is_primal_feasible(self, xb) -> bool:
        ub = self.u[self.basis]
        return bool(np.all(xb >= -self.ftol) and np.all(xb <= ub + self.ftol))

    def run(self, max_iter: int, start_iter: int = 0) -> tuple[str, int]:
        it = start_iter
        best_obj = np.inf
        stall = 0
        while True:
            self.factor()
            x, xb = self.primal()
            pi, d = self.duals()
            obj = float(self.c @ x)
            if obj < best_obj - self.dtol * max(1.0, abs(obj)) * 1e-3:
                best_obj, stall = obj, 0
            else:
                stall += 1
            gain = np.where(self.at_upper, d, -d)
            gain[self.is_basic | self.fixed] = 0.0
            cand = np.flatnonzero(gain > self.dtol)
            if cand.size == 0:
                return OPTIMAL, it
            if it >= max_iter:
                return ITERATION_LIMIT, it
            it += 1
            j = int(cand[0]) if stall > _STALL_LIMIT else int(cand[np.argmax(gain[cand])])
            direction = -1.0 if self.at_upper[j] else 1.0
            alpha = lu_solve(self.lu, self.cols.column(j), check_finite=False)
            delta = -direction * alpha  # rate of change of xb per unit step
            ub = self.u[self.basis]
            dec = delta < -_PIVOT_TOL
            inc = (delta > _PIVOT_TOL) & np.isfinite(ub)
            # Harris pass 1: largest step keeping every basic within relaxed bounds
            t_relaxed = np.inf
            if dec.any():
                t_relaxed = min(t_relaxed, float(np.min((xb[dec] + self.ftol) / -delta[dec])))
            if inc.any():
                t_relaxed = min(t_relaxed, float(np.min((ub[inc] + self.ftol - xb[inc]) / delta[inc])))
            t_flip = self.u[j]
            if not np.isfinite(t_relaxed) and not np.isfinite(t_flip):
                return UNBOUNDED, it
            if t_flip <= t_relaxed:
                self.at_upper[j] = not self.at_upper[j]
                continue
            # pass 2: among ratios within the relaxed step, take the largest pivot
            ratio = np.full(delta.shape, np.inf)
            ratio[dec] = xb[dec] / -delta[dec]
            ratio[inc] = (ub[inc] - xb[inc]) / delta[inc]
            ok = np.flatnonzero(ratio <= t_relaxed)
            r = int(ok[np.argmax(np.abs(delta[ok]))])
            leaving = int(self.basis[r])
            self.at_upper[leaving] = bool(inc[r])
            self.is_basic[leaving] = False
            self.basis[r] = j
            self.is_basic[j] = True
            self.at_upper[j] = False
            self.Bmat[:, r] = self.cols.column(j)

    def canonicalize(self):
        order = np.argsort(self.basis, kind="stable")
        self.basis = self.basis[order]
        self.Bmat = self.Bmat[:, order]
        self.factor()


def slack_feasible(cols, b, upper, basis, at_upper, tol: float = 1e-9) -> bool:
    """Whether ``basis`` with the given nonbasic bound states is primal feasible."""
    run = _Run(cols, np.zeros(cols.n), b, upper, basis, at_upper, tol)
    try:
        run.factor()
    except (ValueError, np.linalg.LinAlgError):
        return False
    _, xb = run.primal()
    return bool(np.all(np.isfinite(xb))) and run.is_primal_feasible(xb)


def bounded_simplex(cols, c, b, upper, basis=None, at_upper=None, tol: float = 1e-9,
                    max_iter: int = 100_000) -> SimplexResult:
    """Minimize ``c @ x`` over ``{A x = b, 0 <= x <= upper}``.

    ``basis`` (``m`` column indices) and ``at_upper`` describe a primal
    feasible starting point; without them a phase-1 problem over artificial
    columns finds one.
    """
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float)
    upper = np.asarray(upper, dtype=float)
    m, n = cols.m, cols.n
    if c.shape != (n,) or upper.shape != (n,) or b.shape != (m,):
        raise ValueError("inconsistent simplex dimensions")
    iters = 0
    if basis is None:
        signs = np.where(b >= 0, 1.0, -1.0)
        aug = _WithArtificials(cols, signs)
        c1 = np.concatenate([np.zeros(n), np.ones(m)])
        u1 = np.concatenate([upper, np.full(m, np.inf)])
        start = np.arange(n, n + m)
        p1 = _Run(aug, c1, b, u1, start, np.zeros(n + m, dtype=bool), tol)
        status, iters = p1.run(max_iter)
        p1.factor()
        x1, _ = p1.primal()
        if status == ITERATION_LIMIT:
            return _result(p1, ITERATION_LIMIT, iters, n)
        if float(np.sum(x1[n:])) > p1.ftol * max(1, m):
            return _result(p1, INFEASIBLE, iters, n)
        # phase 2 keeps leftover artificials, pinned at zero
        u2 = np.concatenate([upper, np.zeros(m)])
        c2 = np.concatenate([c, np.zeros(m)])
        run = _Run(aug, c2, b, u2, p1.basis, p1.at_upper, tol)
    else:
        if at_upper is None:
            at_upper = np.zeros(n, dtype=bool)
        run = _Run(cols, c, b, upper, basis, at_upper, tol)
    status, iters = run.run(max_iter, iters)
    run.canonicalize()
    return _result(run, status, iters, n)


class _DualRun(_Run):
    """Dual simplex iterations on a basis that is (made) dual feasible.

    Boxed nonbasics are moved to the bound their reduced cost prefers, so
    only unboxed columns can be dual infeasible; those get their cost
    shifted to zero. The caller finishes with primal iterations on the true
    costs, which removes any shift.
    """

    def run_dual(self, max_iter: int) -> tuple[str, int]:
        boxed = np.isfinite(self.u) & ~self.fixed
        it = 0
        while True:
            self.factor()
            pi, d = self.duals()
            nb = ~self.is_basic & ~self.fixed
            flip_up = nb & boxed & ~self.at_upper & (d < -self.dtol)
            flip_dn = nb & boxed & self.at_upper & (d > self.dtol)
            self.at_upper[flip_up] = True
            self.at_upper[flip_dn] = False
            bad = nb & ~boxed & (d < -self.dtol)
            if bad.any():
                self.c = self.c.copy()
                self.c[bad] -= d[bad]
                d[bad] = 0.0
            _, xb = self.primal()
            ub = self.u[self.basis]
            below = -xb
            above = xb - ub
            infeas = np.maximum(np.maximum(below, above), 0.0)
            infeas[infeas <= self.ftol] = 0.0
            if not infeas.any():
                return OPTIMAL, it
            if it >= max_iter:
                return ITERATION_LIMIT, it
            it += 1
            Binv = lu_solve(self.lu, np.eye(self.cols.m), check_finite=False)
            weights = np.einsum("ij,ij->i", Binv, Binv)
            r = int(np.argmax(infeas * infeas / weights))
            s = 1.0 if above[r] > 0 else -1.0
            delta = infeas[r]
            rho = Binv[r]
            alpha = self.cols.price(rho)
            sa = s * alpha
            at_up = self.at_upper
            cand = nb & (((~at_up) & (sa > _PIVOT_TOL)) | (at_up & (sa < -_PIVOT_TOL)))
            idx = np.flatnonzero(cand)
            if idx.size == 0:
                return INFEASIBLE, it
            absa = np.abs(alpha[idx])
            ratio = np.where(at_up[idx], np.maximum(-d[idx], 0.0), np.maximum(d[idx], 0.0)) / absa
            order = np.lexsort((idx, ratio))
            u_sorted = self.u[idx[order]]
            drop = absa[order] * u_sorted
            # slope after passing each breakpoint; the entering column is the first
            # one at which the slope stops being positive (unboxed columns stop it)
            after = delta - np.cumsum(drop)
            stop = np.flatnonzero(~(after > 0))
            if stop.size == 0:
                return INFEASIBLE, it
            k = int(stop[0])
            t_q = ratio[order[k]]
            # among (near) ties with the entering ratio, take the largest pivot
            tie_end = k + int(np.searchsorted(ratio[order[k:]], t_q + 1e-12 * (1.0 + t_q), side="right"))
            ties = order[k:tie_end]
            best_pos = int(ties[np.argmax(absa[ties])])
            q = int(idx[best_pos])
            flips = idx[order[:k]]
            self.at_upper[flips] = ~self.at_upper[flips]
            leaving = int(self.basis[r])
            self.is_basic[leaving] = False
            self.at_upper[leaving] = s > 0
            self.basis[r] = q
            self.is_basic[q] = True
            self.at_upper[q] = False
            self.Bmat[:, r] = self.cols.column(q)


def warm_simplex(cols, c, b, upper, basis, at_upper, tol: float = 1e-9,
                 max_iter: int = 100_000) -> SimplexResult:
    """Dual simplex from any nonsingular basis, then primal clean-up on the true costs.

    Needs no primal feasible start, so a previous optimal basis can be
    reused after the costs or right-hand side change.
    """
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = cols.n
    dual = _DualRun(cols, c.copy(), b, upper, basis, at_upper, tol)
    status, iters = dual.run_dual(max_iter)
    if status != OPTIMAL:
        dual.canonicalize()
        return _result(dual, status, iters, n)
    run = _Run(cols, c, b, upper, dual.basis, dual.at_upper, tol)
    status, iters = run.run(max_iter, iters)
    run.canonicalize()
    return _result(run, status, iters, n)


def _result(run: _Run, status: str, iters: int, n: int) -> SimplexResult:
    run.factor()
    x, _ = run.primal()
    pi, d = run.duals()
    x = x[:n]
    # clean roundoff so bounds hold exactly
    x = np.clip(x, 0.0, run.u[:n])
    return SimplexResult(
        status=status,
        x=x,
        duals=pi,
        reduced_costs=d[:n],
        objective=float(run.c[:n] @ x),
        iterations=iters,
        basis=run.basis.copy(),
        at_upper=run.at_upper[:n].copy(),
    )
