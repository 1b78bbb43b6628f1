"""Lead field container, the analytic point-source forward model and target reduction."""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from ..errors import DimensionError, GeometryError, LeadSteerError, TargetLookupError
from ..model import ContactArray, DofGrid, TargetSpec

PROVENANCES = ("synthetic", "imported")
EXCLUSION_RADIUS_MM = 0.05
DEFAULT_CONDUCTIVITY_S_M = 0.2
# Positions resolve to a grid point when closer than this.
POSITION_TOLERANCE_MM = 1e-6
# I/(4 pi d^2) with I in mA and d in mm gives mA/mm^2; 1 mA/mm^2 = 1e3 A/m^2.
MA_PER_MM2_TO_A_PER_M2 = 1e3


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LeadField:
    """Current density at every grid DOF per unit (1 mA) injection at each contact.

    ``matrix`` has shape ``(3 * n_positions, n_contacts)`` in A/m² per mA.
    """

    matrix: np.ndarray
    grid: DofGrid
    contacts: ContactArray
    provenance: str = "synthetic"
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        L = np.asarray(self.matrix, dtype=float)
        n, k = self.grid.n_dof, self.contacts.n_contacts
        if L.shape != (n, k):
            raise DimensionError("lead field shape (3*positions, contacts)", (n, k), L.shape)
        if not np.all(np.isfinite(L)):
            i, j = np.argwhere(~np.isfinite(L))[0]
            raise LeadSteerError(f"lead field entry ({i}, {j}) is not finite")
        if self.provenance not in PROVENANCES:
            raise LeadSteerError(f"unknown provenance {self.provenance!r}")
        object.__setattr__(self, "matrix", _frozen(L))
        object.__setattr__(self, "metadata", MappingProxyType(dict(self.metadata)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def block(self, position_index: int) -> np.ndarray:
        """The three Cartesian rows belonging to one grid position."""
        return self.matrix[3 * position_index: 3 * position_index + 3]

    def with_matrix(self, matrix, **metadata) -> "LeadField":
        meta = dict(self.metadata)
        meta.update(metadata)
        return LeadField(matrix, self.grid, self.contacts, self.provenance, meta)


def point_source_density(points, source, current: float = 1.0) -> np.ndarray:
    """Current density (A/m²) of a point source in an infinite homogeneous medium.

    ``points`` is ``(n, 3)`` in mm, ``current`` in mA. The density does not
    depend on conductivity; only the potential would.
    """
    r = np.asarray(points, dtype=float) - np.asarray(source, dtype=float)
    d = np.linalg.norm(r, axis=-1, keepdims=True)
    return MA_PER_MM2_TO_A_PER_M2 * current * r / (4.0 * np.pi * d**3)


def synthesize_leadfield(contacts: ContactArray, grid: DofGrid,
                         conductivity: float = DEFAULT_CONDUCTIVITY_S_M) -> LeadField:
    """Analytic lead field with every contact modelled as a point source at its centre."""
    if not (np.isfinite(conductivity) and conductivity > 0):
        raise GeometryError(f"conductivity must be positive, got {conductivity!r}")
    P = grid.positions
    C = contacts.centers
    dist = np.linalg.norm(P[:, None, :] - C[None, :, :], axis=2)
    bad = np.argwhere(dist <= EXCLUSION_RADIUS_MM)
    if bad.size:
        i, j = bad[0]
        raise GeometryError(
            f"grid position {i} {P[i].tolist()} is {dist[i, j]:.4g} mm from contact "
            f"{contacts.contacts[j].label!r}, inside the {EXCLUSION_RADIUS_MM} mm exclusion radius"
        )
    L = np.empty((grid.n_dof, contacts.n_contacts))
    for j in range(contacts.n_contacts):
        L[:, j] = point_source_density(P, C[j]).reshape(-1)
    meta = {"model": "point-source", "conductivity_s_m": float(conductivity)}
    return LeadField(L, grid, contacts, "synthetic", meta)


def resolve_position(grid: DofGrid, position, tol: float = POSITION_TOLERANCE_MM) -> int:
    idx, dist = grid.nearest(position)
    if dist > tol:
        raise TargetLookupError(np.asarray(position, dtype=float).tolist(), idx,
                                grid.positions[idx].tolist(), dist)
    return idx


def projection_matrix(direction) -> np.ndarray:
    """Orthogonal projector ``d dᵀ`` onto a unit direction."""
    d = np.asarray(direction, dtype=float).reshape(3, 1)
    return d @ d.T


@dataclass(frozen=True, eq=False)
class ReducedSystem:
    """Target/nuisance split of a lead field for one dipolar target.

    ``l1`` is the target block projected onto the target orientation (one
    row), ``l2`` holds every row of every other position, and ``x1`` is the
    desired focused density along the orientation.
    """

    l1: np.ndarray
    l2: np.ndarray
    x1: np.ndarray
    target: TargetSpec
    parent: LeadField | None = None
    target_index: int = -1
    target_rows: tuple[int, ...] = ()
    nuisance_rows: np.ndarray | None = None

    def __post_init__(self):
        l1 = np.atleast_2d(np.asarray(self.l1, dtype=float))
        l2 = np.atleast_2d(np.asarray(self.l2, dtype=float))
        x1 = np.asarray(self.x1, dtype=float).reshape(-1)
        if l1.shape[1] != l2.shape[1]:
            raise DimensionError("nuisance block column count", l1.shape[1], l2.shape[1])
        if x1.shape[0] != l1.shape[0]:
            raise DimensionError("target vector length", l1.shape[0], x1.shape[0])
        object.__setattr__(self, "l1", _frozen(l1))
        object.__setattr__(self, "l2", _frozen(l2))
        object.__setattr__(self, "x1", _frozen(x1))
        if self.nuisance_rows is not None:
            object.__setattr__(self, "nuisance_rows",
                               np.asarray(self.nuisance_rows, dtype=np.int64))

    @property
    def n_contacts(self) -> int:
        return self.l1.shape[1]

    @property
    def n_target(self) -> int:
        return self.l1.shape[0]

    @property
    def n_nuisance(self) -> int:
        return self.l2.shape[0]

    @property
    def stacked(self) -> np.ndarray:
        """``[l1; l2]``, the reduced lead field seen by the solvers."""
        return np.vstack([self.l1, self.l2])

    def norm1(self) -> float:
        """Largest absolute column sum of the reduced lead field."""
        return float(np.max(np.abs(self.l1).sum(axis=0) + np.abs(self.l2).sum(axis=0)))

    def norm2(self) -> float:
        """Spectral norm of the reduced lead field."""
        return float(np.linalg.norm(self.stacked, 2))


def reduce_system(field: LeadField, target: TargetSpec) -> ReducedSystem:
    idx = resolve_position(field.grid, target.position)
    d = target.orientation
    target_rows = (3 * idx, 3 * idx + 1, 3 * idx + 2)
    l1 = (d @ field.block(idx)).reshape(1, -1)
    mask = np.ones(field.grid.n_dof, dtype=bool)
    mask[list(target_rows)] = False
    nuisance_rows = np.flatnonzero(mask)
    return ReducedSystem(
        l1=l1,
        l2=field.matrix[nuisance_rows],
        x1=np.array([target.magnitude]),
        target=target,
        parent=field,
        target_index=idx,
        target_rows=target_rows,
        nuisance_rows=nuisance_rows,
    )


def system_from_matrices(l1, l2, x1, target: TargetSpec | None = None) -> ReducedSystem:
    """Wrap explicit blocks, e.g. for hand-built test systems."""
    if target is None:
        target = TargetSpec(np.zeros(3), np.array([1.0, 0.0, 0.0]))
    return ReducedSystem(l1=l1, l2=l2, x1=x1, target=target)
