"""Two-parameter lattice search over solver hyperparameters.

Hyperparameters are laid out in decibels and converted with
``value = 10**(dB / 20)``. The best candidate maximizes the field ratio
among candidates whose focused density reaches ``gamma0``; if none does,
the candidate with the largest focused density is returned and flagged
infeasible. Ties go to the lexicographically smallest lattice coordinate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, LeadSteerError, SearchError
from .lp.l1l1 import L1L1Session
from .model import GAMMA0_DEFAULT, PER_CONTACT_BOUND_MA, TOTAL_BUDGET_MA
from .solvers import SolveOutcome, TlsFactors, solve_l1l1, solve_tls

log = logging.getLogger(__name__)

DEFAULT_STEPS = 8
SEARCH_METHODS = ("l1l1", "tls")
# method -> (first axis name, second axis name)
AXIS_NAMES = {"l1l1": ("alpha", "epsilon"), "tls": ("reg", "beta")}


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 20.0)


@dataclass(frozen=True)
class ParamAxis:
    """One lattice axis in dB; ``values_db`` overrides the even spacing."""

    name: str
    min_db: float
    max_db: float
    steps: int = DEFAULT_STEPS
    values_db: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.values_db is not None:
            vals = tuple(float(v) for v in self.values_db)
            if not vals:
                raise ConfigurationError(f"axis {self.name!r} has no values")
            object.__setattr__(self, "values_db", vals)
            object.__setattr__(self, "steps", len(vals))
            return
        if not (math.isfinite(self.min_db) and math.isfinite(self.max_db)):
            raise ConfigurationError(f"axis {self.name!r} bounds must be finite")
        if self.min_db > self.max_db:
            raise ConfigurationError(f"axis {self.name!r}: min_db {self.min_db} > max_db {self.max_db}")
        if int(self.steps) < 1:
            raise ConfigurationError(f"axis {self.name!r}: steps must be >= 1")

    def points_db(self) -> tuple[float, ...]:
        if self.values_db is not None:
            return self.values_db
        return tuple(float(v) for v in np.linspace(self.min_db, self.max_db, int(self.steps)))

    def to_dict(self) -> dict:
        d = {"name": self.name, "min_db": self.min_db, "max_db": self.max_db, "steps": self.steps}
        if self.values_db is not None:
            d["values_db"] = list(self.values_db)
        return d


@dataclass(frozen=True)
class SearchSpace:
    method_tag: str
    param1: ParamAxis
    param2: ParamAxis

    def __post_init__(self):
        if self.method_tag not in SEARCH_METHODS:
            raise ConfigurationError(f"no lattice search for method {self.method_tag!r}")
        expected = AXIS_NAMES[self.method_tag]
        if (self.param1.name, self.param2.name) != expected:
            raise ConfigurationError(
                f"{self.method_tag} axes must be named {expected}, got "
                f"{(self.param1.name, self.param2.name)}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.param1.steps, self.param2.steps

    @property
    def size(self) -> int:
        return self.param1.steps * self.param2.steps

    def to_dict(self) -> dict:
        return {"method": self.method_tag, "param1": self.param1.to_dict(),
                "param2": self.param2.to_dict()}


PRESETS = {
    "l1l1_a": ("l1l1", (-100.0, -30.0), (-160.0, 0.0)),
    "l1l1_b": ("l1l1", (-100.0, -30.0), (-10.0, 0.0)),
    "tls_default": ("tls", (-200.0, -110.0), (-50.0, 40.0)),
}


def preset(variant: str, steps: int = DEFAULT_STEPS) -> SearchSpace:
    """Published hyperparameter ranges; ``steps`` points per axis."""
    try:
        method, r1, r2 = PRESETS[variant]
    except KeyError:
        raise ConfigurationError(f"unknown preset {variant!r}; expected one of {sorted(PRESETS)}") from None
    n1, n2 = AXIS_NAMES[method]
    return SearchSpace(method, ParamAxis(n1, *r1, steps), ParamAxis(n2, *r2, steps))


@dataclass(frozen=True, eq=False)
class CandidateSolution:
    outcome: SolveOutcome
    grid_coordinates: tuple[int, int]
    feasible: bool
    values_db: tuple[float, float] = (math.nan, math.nan)


@dataclass(frozen=True, eq=False)
class SearchResult:
    best: CandidateSolution
    candidates: list[CandidateSolution]
    failures: dict = field(default_factory=dict)
    space: SearchSpace | None = None

    @property
    def all(self) -> list[CandidateSolution]:
        return self.candidates


def select_best(candidates: list[CandidateSolution]) -> CandidateSolution:
    """Pure reduction: max field ratio over feasible, else max focused density."""
    if not candidates:
        raise ConfigurationError("no candidates to select from")
    ordered = sorted(candidates, key=lambda c: c.grid_coordinates)
    feasible = [c for c in ordered if c.feasible]
    pool, key = (feasible, "theta") if feasible else (ordered, "gamma")
    best = pool[0]
    for c in pool[1:]:
        if getattr(c.outcome.metrics, key) > getattr(best.outcome.metrics, key):
            best = c
    return best


def lattice_search(system, space: SearchSpace, gamma0: float = GAMMA0_DEFAULT,
                   per_contact: float = PER_CONTACT_BOUND_MA,
                   total_budget: float = TOTAL_BUDGET_MA) -> SearchResult:
    """Evaluate the method at every lattice point and pick the best candidate.

    The first axis is the outer loop. L1L1 solves share one session so
    consecutive points warm-start; Tikhonov solves share factorizations.
    """
    if not (gamma0 > 0):
        raise ConfigurationError(f"gamma0 must be positive, got {gamma0!r}")
    p1, p2 = space.param1.points_db(), space.param2.points_db()
    if space.method_tag == "l1l1":
        session = L1L1Session(system, per_contact, total_budget)

        def evaluate(v1, v2):
            return solve_l1l1(system, db_to_linear(v1), db_to_linear(v2), per_contact,
                              total_budget, session=session)
    else:
        factors = TlsFactors(system)

        def evaluate(v1, v2):
            return solve_tls(system, db_to_linear(v1), db_to_linear(v2), per_contact,
                             total_budget, factors=factors)

    candidates, failures = [], {}
    for i, v1 in enumerate(p1):
        for j, v2 in enumerate(p2):
            try:
                out = evaluate(v1, v2)
            except LeadSteerError as exc:
                failures[(i, j)] = getattr(exc, "status", type(exc).__name__)
                log.info("lattice point (%d, %d) failed: %s", i, j, exc)
                if space.method_tag == "l1l1":
                    session.reset()
                continue
            candidates.append(CandidateSolution(out, (i, j), out.metrics.gamma >= gamma0, (v1, v2)))
    if not candidates:
        raise SearchError(failures)
    return SearchResult(select_best(candidates), candidates, failures, space)
