"""Lead field construction, reduction, perturbation and analysis."""

from .analysis import (
    AttenuationSet,
    attenuation_set,
    db_to_ratio,
    dynamic_range_bound,
    position_row_norms,
    ratio_to_db,
    zero_average_rows,
)
from .geometry import build_geometry, build_grid, contacts8, contacts40, high_grid, low_grid
from .io import export_leadfield, export_leadfield_csv, import_leadfield, import_leadfield_csv
from .noise import NoiseSpec, add_noise, noise_sigma
from .synth import (
    LeadField,
    ReducedSystem,
    point_source_density,
    projection_matrix,
    reduce_system,
    resolve_position,
    synthesize_leadfield,
    system_from_matrices,
)

__all__ = [
    "AttenuationSet", "LeadField", "NoiseSpec", "ReducedSystem",
    "add_noise", "attenuation_set", "build_geometry", "build_grid", "contacts8", "contacts40",
    "db_to_ratio", "dynamic_range_bound", "export_leadfield", "export_leadfield_csv",
    "high_grid", "import_leadfield", "import_leadfield_csv", "low_grid", "noise_sigma",
    "point_source_density", "position_row_norms", "projection_matrix", "ratio_to_db",
    "reduce_system", "resolve_position", "synthesize_leadfield", "system_from_matrices",
    "zero_average_rows",
]
