"""Current-steering methods: reciprocity pair, Tikhonov least squares and L1L1.

Each solver maps a reduced system (plus hyperparameters in linear scale) to
a :class:`SolveOutcome` whose pattern satisfies the box, budget and zero-sum
constraints.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ConfigurationError, DegenerateTargetError, DimensionError, LpStatusError
from .lp.l1l1 import L1L1Session
from .lp.program import DEFAULT_TOLERANCE
from .model import (
    PER_CONTACT_BOUND_MA,
    TOTAL_BUDGET_MA,
    CurrentPattern,
    DecisionVariables,
    decision_variables,
    fit_to_bounds,
    nuisance_density,
)

log = logging.getLogger(__name__)

METHOD_TAGS = ("rp", "tls", "l1l1")
CONDITION_WARNING = 1e14


@dataclass(frozen=True, eq=False)
class SolveOutcome:
    pattern: CurrentPattern
    metrics: DecisionVariables
    method_tag: str
    hyperparameters: Mapping[str, float] = field(default_factory=dict)
    diagnostics: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.method_tag not in METHOD_TAGS:
            raise ConfigurationError(f"unknown method tag {self.method_tag!r}")


def db(value: float) -> float | None:
    """Decibel value of a positive amplitude, ``None`` otherwise."""
    return 20.0 * math.log10(value) if value > 0 else None


def _hyper(**linear) -> dict:
    out = {}
    for name, v in linear.items():
        out[name] = float(v)
        out[f"{name}_db"] = db(float(v))
    return out


def _contact_label(system, index: int) -> str:
    parent = getattr(system, "parent", None)
    if parent is not None:
        return parent.contacts.labels[index]
    return str(index)


def solve_rp(system, per_contact: float = PER_CONTACT_BOUND_MA,
             total_budget: float = TOTAL_BUDGET_MA) -> SolveOutcome:
    """Bipolar pattern on the contacts with the extreme target sensitivity.

    The anode gets ``+amp`` and the cathode ``-amp`` with
    ``amp = min(per_contact, total_budget / 2)``.
    """
    start = time.perf_counter()
    k = system.l1.shape[1]
    if k < 2:
        raise DimensionError("contact count for a bipolar pair", ">= 2", k)
    w = system.l1.T @ system.x1
    if np.all(w == w[0]):
        raise DegenerateTargetError("all contacts couple equally to the target; no pole pair")
    anode, cathode = int(np.argmax(w)), int(np.argmin(w))
    amp = min(per_contact, total_budget / 2)
    y = np.zeros(k)
    y[anode], y[cathode] = amp, -amp
    pattern = CurrentPattern(y, per_contact, total_budget)
    diag = {
        "anode": anode, "cathode": cathode,
        "anode_label": _contact_label(system, anode),
        "cathode_label": _contact_label(system, cathode),
        "seconds": time.perf_counter() - start,
    }
    return SolveOutcome(pattern, decision_variables(system, pattern), "rp", {}, diag)


class TlsFactors:
    """Per-system quantities reused across Tikhonov solves.

    The spectral norm of ``[l1; l2]`` and the nuisance Gram matrix depend
    only on the system; the Cholesky factor depends on the nuisance weight
    only and is cached per weight.
    """

    def __init__(self, system):
        self.system = system
        self.l1 = np.asarray(system.l1, dtype=float)
        self.x1 = np.asarray(system.x1, dtype=float)
        self.rhs = self.l1.T @ self.x1
        if not np.all(np.isfinite(self.rhs)):
            raise ConfigurationError("least-squares right-hand side is not finite")
        l2 = np.asarray(system.l2, dtype=float)
        self.gram2 = l2.T @ l2
        self.spectral = float(np.linalg.norm(np.vstack([self.l1, l2]), 2))
        eig = np.linalg.eigvalsh(self.gram2)
        self.gram2_min, self.gram2_max = float(max(eig[0], 0.0)), float(eig[-1])
        self.l1_sq = float(np.sum(self.l1 * self.l1))
        self._chol: dict[float, tuple] = {}

    def _weighted(self, beta: float):
        key = float(beta)
        if key not in self._chol:
            k = self.gram2.shape[0]
            G = beta * beta * self.gram2 + self.spectral**2 * np.eye(k)
            self._chol[key] = cho_factor(G, lower=True)
        return self._chol[key]

    def condition_estimate(self, reg: float, beta: float) -> float:
        g2 = reg * reg
        s2 = self.spectral**2
        hi = self.l1_sq + g2 * (beta * beta * self.gram2_max + s2)
        lo = g2 * (beta * beta * self.gram2_min + s2)
        return hi / lo if lo > 0 else math.inf

    def solve(self, reg: float, beta: float) -> np.ndarray:
        """Solution of ``(l1'l1 + reg² (beta² l2'l2 + s² I)) y = l1' x1``.

        Factoring the nuisance-plus-ridge part ``G`` and working in the
        (small) target space avoids forming the badly conditioned normal
        matrix: ``y = G⁻¹ l1' z`` with ``(l1 G⁻¹ l1' + reg² I) z = x1``.
        """
        if self.spectral == 0.0:
            raise DegenerateTargetError("lead field is identically zero")
        chol = self._weighted(beta)
        GinvL1t = cho_solve(chol, self.l1.T)
        S = self.l1 @ GinvL1t + reg * reg * np.eye(self.l1.shape[0])
        z = np.linalg.solve(S, self.x1)
        return GinvL1t @ z


def tls_system_matrix(system, reg: float, beta: float) -> np.ndarray:
    """Explicit normal matrix, for diagnostics and small problems."""
    l1, l2 = np.asarray(system.l1), np.asarray(system.l2)
    s = float(np.linalg.norm(np.vstack([l1, l2]), 2))
    k = l1.shape[1]
    return l1.T @ l1 + reg**2 * beta**2 * (l2.T @ l2) + reg**2 * s**2 * np.eye(k)


def solve_tls(system, reg: float, beta: float, per_contact: float = PER_CONTACT_BOUND_MA,
              total_budget: float = TOTAL_BUDGET_MA, factors: TlsFactors | None = None) -> SolveOutcome:
    if not (np.isfinite(reg) and reg > 0):
        raise ConfigurationError(f"regularization must be positive, got {reg!r}")
    if not (np.isfinite(beta) and beta >= 0):
        raise ConfigurationError(f"nuisance weight must be nonnegative, got {beta!r}")
    start = time.perf_counter()
    if factors is None:
        factors = TlsFactors(system)
    raw = factors.solve(reg, beta)
    cond = factors.condition_estimate(reg, beta)
    warnings = []
    if cond > CONDITION_WARNING:
        warnings.append(f"condition estimate {cond:.3g} exceeds {CONDITION_WARNING:.0e}")
        log.debug("TLS reg=%r beta=%r: %s", reg, beta, warnings[-1])
    pattern = fit_to_bounds(raw, per_contact, total_budget)
    diag = {"condition_estimate": cond, "warnings": warnings, "raw_solution": raw,
            "seconds": time.perf_counter() - start}
    return SolveOutcome(pattern, decision_variables(system, pattern), "tls",
                        _hyper(reg=reg, beta=beta), diag)


def solve_l1l1(system, alpha: float, epsilon: float, per_contact: float = PER_CONTACT_BOUND_MA,
               total_budget: float = TOTAL_BUDGET_MA, session: L1L1Session | None = None,
               tolerance: float = DEFAULT_TOLERANCE) -> SolveOutcome:
    """L1L1 optimum at one (alpha, epsilon).

    Passing a ``session`` reuses its factorization state (warm start). A
    zero target makes ``y = 0`` optimal; that case is answered directly
    with all metrics zero.
    """
    hyper = _hyper(alpha=alpha, epsilon=epsilon)
    if np.all(np.asarray(system.x1) == 0):
        k = system.l1.shape[1]
        pattern = CurrentPattern(np.zeros(k), per_contact, total_budget)
        metrics = DecisionVariables(0.0, nuisance_density(system, pattern), 0.0)
        return SolveOutcome(pattern, metrics, "l1l1", hyper,
                            {"note": "zero target, trivial optimum", "seconds": 0.0})
    if session is None:
        session = L1L1Session(system, per_contact, total_budget, tolerance=tolerance)
    res = session.solve(alpha, epsilon)
    sol = res.solution
    if not sol.optimal:
        raise LpStatusError(sol.status, f"L1L1 at alpha={alpha!r}, epsilon={epsilon!r}")
    pattern = fit_to_bounds(res.currents, per_contact, total_budget)
    diag = {
        "iterations": res.iterations,
        "warm_started": res.warm_started,
        "objective": sol.objective_value,
        "certificate": sol.certificate.to_dict(),
        "seconds": res.seconds,
    }
    return SolveOutcome(pattern, decision_variables(system, pattern), "l1l1", hyper, diag)
