"""Bundled synthetic scenes: lead fields, named targets and example configs."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

from ..leadfield import build_geometry, build_grid, synthesize_leadfield
from ..leadfield.synth import DEFAULT_CONDUCTIVITY_S_M, LeadField
from ..model import TARGET_MAGNITUDE_DEFAULT, TargetSpec, aligned_target

# Named target points of the desk scene; each is snapped to the nearest grid position.
DESK_TARGETS = {
    "I": (-1.667, -1.667, 0.0),
    "II": (-1.667, 1.667, -3.333),
}
DEMO_TARGET = "I"
BUNDLED_CONFIGS = ("demo_study", "desk_noise_study", "acceptance_study")


def _grid_kwargs(grid: dict) -> dict:
    keys = {"extent_mm": "extent", "radius_mm": "radius", "spacing_mm": "spacing"}
    return {keys[k]: float(v) for k, v in grid.items() if k in keys}


def grid_key(grid: dict) -> tuple:
    return tuple(sorted((k, v) for k, v in grid.items()))


@lru_cache(maxsize=8)
def _scene_field(geometry: str, grid_items: tuple, conductivity: float) -> LeadField:
    grid = dict(grid_items)
    g = build_grid(grid.get("resolution", "low"), **_grid_kwargs(grid))
    return synthesize_leadfield(build_geometry(geometry), g, conductivity)


def scene_field(geometry: str, grid: dict | None = None,
                conductivity: float = DEFAULT_CONDUCTIVITY_S_M) -> LeadField:
    """Synthetic lead field for a named geometry and grid; cached per process."""
    grid = grid or {"resolution": "low"}
    return _scene_field(geometry, grid_key(grid), float(conductivity))


def scene_target(field: LeadField, name_or_point, orientation: str = "parallel",
                 magnitude: float = TARGET_MAGNITUDE_DEFAULT, direction=None) -> TargetSpec:
    """Target at a named desk point (or explicit point), snapped to ``field.grid``."""
    point = DESK_TARGETS[name_or_point] if isinstance(name_or_point, str) else name_or_point
    idx, _ = field.grid.nearest(point)
    return aligned_target(field.grid.positions[idx], orientation, magnitude, direction)


def bundled_config(name: str) -> dict:
    """Decoded copy of one of the example study configs shipped with the package."""
    if name not in BUNDLED_CONFIGS:
        raise KeyError(f"unknown bundled config {name!r}; expected one of {BUNDLED_CONFIGS}")
    text = resources.files(__package__).joinpath(f"{name}.json").read_text(encoding="utf-8")
    return json.loads(text)
