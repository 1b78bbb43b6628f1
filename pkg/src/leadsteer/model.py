"""Domain types shared across leadsteer and the decision-variable metrics.

Units follow the lead field: currents in mA, current densities in A/m²,
lengths in mm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, ConstraintViolation, DimensionError, InvalidTargetError

PER_CONTACT_BOUND_MA = 2.0
TOTAL_BUDGET_MA = 4.0
GAMMA0_DEFAULT = 0.8
# Neural activation reference, reported alongside results and never used by the solvers.
ACTIVATION_REFERENCE_A_M2 = 3.85
TARGET_MAGNITUDE_DEFAULT = 10.0

RESOLUTION_TAGS = ("low", "high", "custom")
ALIGNMENT_TAGS = ("parallel", "perpendicular", "custom")


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Contact:
    center: tuple[float, float, float]
    normal: tuple[float, float, float]
    label: str
    row: int
    sector: int


@dataclass(frozen=True)
class ContactArray:
    """Electrode contacts on a cylindrical lead whose axis is the z axis."""

    lead_diameter: float
    contacts: tuple[Contact, ...]
    impedance_kohm: float = 2.0
    model: str = "custom"

    def __post_init__(self):
        if len(self.contacts) < 2:
            raise ConfigurationError(f"a lead needs at least 2 contacts, got {len(self.contacts)}")
        labels = [c.label for c in self.contacts]
        if len(set(labels)) != len(labels):
            raise ConfigurationError("contact labels must be unique")

    @property
    def n_contacts(self) -> int:
        return len(self.contacts)

    @property
    def centers(self) -> np.ndarray:
        return np.array([c.center for c in self.contacts], dtype=float)

    @property
    def labels(self) -> list[str]:
        return [c.label for c in self.contacts]

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "lead_diameter": self.lead_diameter,
            "impedance_kohm": self.impedance_kohm,
            "contacts": [
                {
                    "label": c.label,
                    "center": list(c.center),
                    "normal": list(c.normal),
                    "row": c.row,
                    "sector": c.sector,
                }
                for c in self.contacts
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ContactArray":
        contacts = tuple(
            Contact(
                center=tuple(float(v) for v in c["center"]),
                normal=tuple(float(v) for v in c["normal"]),
                label=str(c["label"]),
                row=int(c["row"]),
                sector=int(c["sector"]),
            )
            for c in d["contacts"]
        )
        return cls(
            lead_diameter=float(d["lead_diameter"]),
            contacts=contacts,
            impedance_kohm=float(d.get("impedance_kohm", 2.0)),
            model=str(d.get("model", "custom")),
        )


@dataclass(frozen=True, eq=False)
class DofGrid:
    """Source positions, each carrying three Cartesian dipole orientations.

    Row ``3*i + c`` of a lead field belongs to position ``i`` and Cartesian
    component ``c`` (x, y, z).
    """

    positions: np.ndarray
    resolution_tag: str = "custom"

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise ConfigurationError(f"grid positions must be an (n, 3) array, got shape {pos.shape}")
        if not np.all(np.isfinite(pos)):
            raise ConfigurationError("grid positions must be finite")
        if self.resolution_tag not in RESOLUTION_TAGS:
            raise ConfigurationError(f"unknown resolution tag {self.resolution_tag!r}")
        if len(np.unique(pos, axis=0)) != len(pos):
            raise ConfigurationError("grid positions must be pairwise distinct")
        object.__setattr__(self, "positions", _frozen(pos))

    @property
    def n_positions(self) -> int:
        return self.positions.shape[0]

    @property
    def n_dof(self) -> int:
        return 3 * self.positions.shape[0]

    @property
    def orientations(self) -> np.ndarray:
        return np.eye(3)

    def nearest(self, point) -> tuple[int, float]:
        d = np.linalg.norm(self.positions - np.asarray(point, dtype=float), axis=1)
        i = int(np.argmin(d))
        return i, float(d[i])

    def __eq__(self, other):
        if not isinstance(other, DofGrid):
            return NotImplemented
        return self.resolution_tag == other.resolution_tag and np.array_equal(
            self.positions, other.positions
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class TargetSpec:
    position: np.ndarray
    orientation: np.ndarray
    alignment: str = "custom"
    magnitude: float = TARGET_MAGNITUDE_DEFAULT

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float).reshape(-1)
        d = np.asarray(self.orientation, dtype=float).reshape(-1)
        if p.shape != (3,) or d.shape != (3,):
            raise InvalidTargetError("target position and orientation must be 3-vectors")
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise InvalidTargetError(f"target orientation must have unit norm, got {np.linalg.norm(d)!r}")
        if self.alignment not in ALIGNMENT_TAGS:
            raise InvalidTargetError(f"unknown alignment tag {self.alignment!r}")
        if not (math.isfinite(self.magnitude) and self.magnitude > 0):
            raise InvalidTargetError("target magnitude must be positive and finite")
        object.__setattr__(self, "position", _frozen(p))
        object.__setattr__(self, "orientation", _frozen(d))

    def __eq__(self, other):
        if not isinstance(other, TargetSpec):
            return NotImplemented
        return (
            np.array_equal(self.position, other.position)
            and np.array_equal(self.orientation, other.orientation)
            and self.alignment == other.alignment
            and self.magnitude == other.magnitude
        )

    __hash__ = None


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0 or not np.isfinite(n):
        raise InvalidTargetError("cannot normalize a zero or non-finite direction")
    u = v / n
    # one more pass makes the norm exact to within an ulp
    return u / np.linalg.norm(u)


def aligned_target(position, alignment: str, magnitude: float = TARGET_MAGNITUDE_DEFAULT,
                   direction=None) -> TargetSpec:
    """Build a target whose orientation is parallel or perpendicular to the lead.

    The lead axis is +z. "perpendicular" points radially away from the axis
    through the target position.
    """
    position = np.asarray(position, dtype=float)
    if alignment == "parallel":
        d = np.array([0.0, 0.0, 1.0])
    elif alignment == "perpendicular":
        radial = np.array([position[0], position[1], 0.0])
        if np.linalg.norm(radial) < 1e-12:
            raise InvalidTargetError("perpendicular orientation is undefined on the lead axis")
        d = unit(radial)
    elif alignment == "custom":
        if direction is None:
            raise InvalidTargetError("custom alignment needs an explicit direction")
        d = unit(direction)
    else:
        raise InvalidTargetError(f"unknown alignment tag {alignment!r}")
    return TargetSpec(position=position, orientation=d, alignment=alignment, magnitude=magnitude)


@dataclass(frozen=True, eq=False)
class CurrentPattern:
    """Electrode currents (mA) satisfying box, budget and zero-sum constraints."""

    currents: np.ndarray
    per_contact_bound: float = PER_CONTACT_BOUND_MA
    total_budget: float = TOTAL_BUDGET_MA
    rtol: float = field(default=1e-9, repr=False)

    def __post_init__(self):
        y = np.asarray(self.currents, dtype=float).reshape(-1)
        if y.size < 1:
            raise ConstraintViolation("empty current pattern")
        if not np.all(np.isfinite(y)):
            raise ConstraintViolation("current pattern contains non-finite values")
        p, mu = self.per_contact_bound, self.total_budget
        if not (p > 0 and mu > 0):
            raise ConstraintViolation("bounds must be positive")
        worst = float(np.max(np.abs(y)))
        if worst > p * (1 + self.rtol):
            raise ConstraintViolation(f"per-contact bound exceeded: max |y| = {worst!r} > {p!r}")
        l1 = float(np.sum(np.abs(y)))
        if l1 > mu * (1 + self.rtol):
            raise ConstraintViolation(f"total budget exceeded: sum |y| = {l1!r} > {mu!r}")
        s = float(np.sum(y))
        if abs(s) > 1e-9 * mu:
            raise ConstraintViolation(f"currents do not sum to zero: sum y = {s!r}")
        object.__setattr__(self, "currents", _frozen(y))

    @property
    def n_contacts(self) -> int:
        return self.currents.size

    def scaled(self, c: float) -> "CurrentPattern":
        return CurrentPattern(self.currents * c, self.per_contact_bound, self.total_budget, self.rtol)

    def __eq__(self, other):
        if not isinstance(other, CurrentPattern):
            return NotImplemented
        return (
            np.array_equal(self.currents, other.currents)
            and self.per_contact_bound == other.per_contact_bound
            and self.total_budget == other.total_budget
        )

    __hash__ = None


@dataclass(frozen=True)
class DecisionVariables:
    gamma: float
    xi: float
    theta: float

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "xi": self.xi, "theta": self.theta}


def _currents(system, pattern) -> np.ndarray:
    y = pattern.currents if isinstance(pattern, CurrentPattern) else np.asarray(pattern, dtype=float)
    k = system.l1.shape[1]
    if y.shape != (k,):
        raise DimensionError("current pattern length (contact count K)", k, y.shape[0] if y.ndim == 1 else y.shape)
    return y


def focused_density(system, pattern) -> float:
    """Projection of the induced target field onto the target vector, in A/m²."""
    y = _currents(system, pattern)
    x1 = np.asarray(system.x1, dtype=float)
    nx = math.sqrt(float(np.sum(x1 * x1)))
    if nx == 0.0:
        raise InvalidTargetError("target vector has zero norm")
    return float(np.dot(x1, system.l1 @ y)) / nx


def nuisance_density(system, pattern) -> float:
    """Root-mean-square of the induced field outside the target."""
    y = _currents(system, pattern)
    m = system.l2.shape[0]
    if m == 0:
        raise ConfigurationError("nuisance region is empty")
    w = system.l2 @ y
    return math.sqrt(float(np.sum(w * w))) / math.sqrt(m)


def field_ratio(gamma: float, xi: float) -> float:
    """Focality Γ/Ξ.

    Total by convention: ``0`` when both are zero and a signed infinity when
    only ``xi`` is zero.
    """
    if xi < 0:
        raise ValueError(f"nuisance density must be nonnegative, got {xi!r}")
    if xi > 0:
        return gamma / xi
    if gamma == 0:
        return 0.0
    return math.inf if gamma > 0 else -math.inf


def decision_variables(system, pattern) -> DecisionVariables:
    g = focused_density(system, pattern)
    x = nuisance_density(system, pattern)
    return DecisionVariables(gamma=g, xi=x, theta=field_ratio(g, x))


def fit_to_bounds(y, per_contact: float = PER_CONTACT_BOUND_MA,
                  total_budget: float = TOTAL_BUDGET_MA) -> CurrentPattern:
    """Remove the mean, then shrink uniformly until box and budget both hold.

    Uniform scaling keeps the field shape, so the field ratio is unchanged.
    """
    y = np.asarray(y, dtype=float)
    y = y - np.mean(y)
    y = y - np.mean(y)
    excess = max(float(np.max(np.abs(y), initial=0.0)) / per_contact,
                 float(np.sum(np.abs(y))) / total_budget)
    if excess > 1.0:
        y = y / excess
    return CurrentPattern(y, per_contact, total_budget)


def as_pattern(currents: Sequence[float], per_contact: float = PER_CONTACT_BOUND_MA,
               total_budget: float = TOTAL_BUDGET_MA) -> CurrentPattern:
    return CurrentPattern(np.asarray(currents, dtype=float), per_contact, total_budget)
