"""Row-norm analysis of a lead field: attenuation sets and dynamic-range bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, DegenerateTargetError


def db_to_ratio(db: float) -> float:
    """Amplitude ratio of a decibel value, ``10**(db/20)``."""
    return float(10.0 ** (db / 20.0))


def ratio_to_db(ratio: float) -> float:
    return float(20.0 * np.log10(ratio))


def _matrix_of(obj) -> np.ndarray:
    if hasattr(obj, "matrix"):
        return np.asarray(obj.matrix, dtype=float)
    if hasattr(obj, "l1") and hasattr(obj, "l2"):
        return np.vstack([obj.l1, obj.l2])
    return np.atleast_2d(np.asarray(obj, dtype=float))


def zero_average_rows(field) -> np.ndarray:
    """Subtract each row's mean over contacts.

    Accepts a LeadField, a ReducedSystem or a plain matrix and returns a new
    array; the input is not modified.
    """
    L = _matrix_of(field)
    if L.shape[1] < 1:
        raise ConfigurationError("zero-averaging needs at least one column")
    out = L - L.mean(axis=1, keepdims=True)
    # a second pass removes the rounding left over by the first
    return out - out.mean(axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class AttenuationSet:
    """Grid positions whose zero-averaged rows reach ``delta`` times the strongest row."""

    delta: float
    member_indices: frozenset
    row_norms: np.ndarray

    @property
    def max_norm(self) -> float:
        return float(np.max(self.row_norms))

    @property
    def threshold(self) -> float:
        return self.delta * self.max_norm

    def __contains__(self, index) -> bool:
        return index in self.member_indices

    def __len__(self) -> int:
        return len(self.member_indices)

    def sorted_members(self) -> list[int]:
        return sorted(self.member_indices)


def position_row_norms(field) -> np.ndarray:
    """Per-position norm: the largest of its three zero-averaged Cartesian rows."""
    Z = zero_average_rows(field)
    if Z.shape[0] % 3:
        raise ConfigurationError(f"row count {Z.shape[0]} is not a multiple of 3")
    norms = np.linalg.norm(Z, axis=1).reshape(-1, 3)
    return norms.max(axis=1)


def attenuation_set(field, delta: float) -> AttenuationSet:
    if not (0.0 <= delta <= 1.0):
        raise ConfigurationError(f"delta must lie in [0, 1], got {delta!r}")
    norms = position_row_norms(field)
    norms.setflags(write=False)
    thr = delta * float(np.max(norms))
    members = frozenset(int(i) for i in np.flatnonzero(norms >= thr))
    return AttenuationSet(float(delta), members, norms)


def dynamic_range_bound(aset: AttenuationSet, target_index: int) -> float:
    """Smallest nuisance tolerance compatible with the attenuation threshold at a target."""
    if not (0 <= target_index < aset.row_norms.size):
        raise ConfigurationError(f"target index {target_index} outside 0..{aset.row_norms.size - 1}")
    own = float(aset.row_norms[target_index])
    if own <= 0.0:
        raise DegenerateTargetError(f"zero-averaged rows at position {target_index} vanish")
    return aset.delta * aset.max_norm / own
