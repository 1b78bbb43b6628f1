"""Lead contact layouts and source-position grids.

The lead axis is the z axis and the contact array is centred on the origin,
so the sphere of the high-resolution grid is co-centred with the lead.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError
from ..model import Contact, ContactArray, DofGrid

LEAD_DIAMETER_MM = 1.27
CONTACT_IMPEDANCE_KOHM = 2.0

# 8-contact lead: four bands 2.0 mm apart (1.5 mm contact + 0.5 mm gap),
# the two middle bands split into three sectors.
BAND_PITCH_MM = 2.0
SECTORS_8 = (1, 3, 3, 1)

# 40-contact lead: 8 rows of 5 contacts. Neighbouring rows are shifted by
# 0.75 mm along the axis and staggered by half a sector, so contacts sharing
# an azimuth are 1.5 mm apart.
ROWS_40 = 8
PER_ROW_40 = 5
ROW_SHIFT_MM = 0.75

LOW_GRID_EXTENT_MM = 20.0
HIGH_GRID_RADIUS_MM = 6.0
HIGH_GRID_SPACING_MM = 0.631
LEAD_CLEARANCE_MM = 0.25


def _on_cylinder(radius: float, azimuth_deg: float, z: float):
    a = np.deg2rad(azimuth_deg)
    center = (radius * float(np.cos(a)), radius * float(np.sin(a)), float(z))
    normal = (float(np.cos(a)), float(np.sin(a)), 0.0)
    return center, normal


def contacts8(diameter: float = LEAD_DIAMETER_MM) -> ContactArray:
    """1-3-3-1 directional lead; ring contacts sit at azimuth 0."""
    r = diameter / 2
    contacts = []
    zs = (np.arange(len(SECTORS_8)) - (len(SECTORS_8) - 1) / 2) * BAND_PITCH_MM
    for row, (n_sec, z) in enumerate(zip(SECTORS_8, zs)):
        for sec in range(n_sec):
            center, normal = _on_cylinder(r, 360.0 * sec / n_sec, z)
            label = f"{row + 1}" if n_sec == 1 else f"{row + 1}{'abc'[sec]}"
            contacts.append(Contact(center, normal, label, row, sec))
    return ContactArray(diameter, tuple(contacts), CONTACT_IMPEDANCE_KOHM, "contacts8")


def contacts40(diameter: float = LEAD_DIAMETER_MM) -> ContactArray:
    r = diameter / 2
    pitch = 360.0 / PER_ROW_40
    contacts = []
    for row in range(ROWS_40):
        z = (row - (ROWS_40 - 1) / 2) * ROW_SHIFT_MM
        stagger = pitch / 2 if row % 2 else 0.0
        for sec in range(PER_ROW_40):
            center, normal = _on_cylinder(r, stagger + pitch * sec, z)
            contacts.append(Contact(center, normal, f"R{row + 1}C{sec + 1}", row, sec))
    return ContactArray(diameter, tuple(contacts), CONTACT_IMPEDANCE_KOHM, "contacts40")


GEOMETRIES = {"contacts8": contacts8, "contacts40": contacts40}


def build_geometry(model: str) -> ContactArray:
    try:
        return GEOMETRIES[model]()
    except KeyError:
        raise ConfigurationError(
            f"unknown lead model {model!r}; expected one of {sorted(GEOMETRIES)}"
        ) from None


def low_grid(extent: float = LOW_GRID_EXTENT_MM) -> DofGrid:
    """Regular 6 x 6 x 7 lattice (252 positions) filling a cube of side ``extent``.

    The x/y planes straddle the lead axis so no position falls inside the lead.
    """
    h = extent / 6
    xy = (np.arange(6) - 2.5) * h
    z = (np.arange(7) - 3.0) * h
    X, Y, Z = np.meshgrid(xy, xy, z, indexing="ij")
    return DofGrid(np.column_stack([X.ravel(), Y.ravel(), Z.ravel()]), "low")


def high_grid(radius: float = HIGH_GRID_RADIUS_MM, spacing: float = HIGH_GRID_SPACING_MM,
              lead_radius: float = LEAD_DIAMETER_MM / 2,
              clearance: float = LEAD_CLEARANCE_MM) -> DofGrid:
    """Cubic lattice inside a sphere co-centred with the lead, minus the lead body."""
    n = int(np.ceil(radius / spacing))
    ax = np.arange(-n, n + 1) * spacing
    X, Y, Z = np.meshgrid(ax, ax, ax, indexing="ij")
    P = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    inside = np.linalg.norm(P, axis=1) <= radius
    outside_lead = np.hypot(P[:, 0], P[:, 1]) >= lead_radius + clearance
    return DofGrid(P[inside & outside_lead], "high")


GRIDS = {"low": low_grid, "high": high_grid}


def build_grid(resolution: str, **kwargs) -> DofGrid:
    try:
        return GRIDS[resolution](**kwargs)
    except KeyError:
        raise ConfigurationError(
            f"unknown grid resolution {resolution!r}; expected one of {sorted(GRIDS)}"
        ) from None
