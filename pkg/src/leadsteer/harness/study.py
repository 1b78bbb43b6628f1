"""Study runner: expands a config into work units, solves them and summarizes.

A work unit is one (geometry, target, noise level, realization) tuple. All
methods of a unit run on the same perturbed lead field. The noise seed of
a unit is derived from the master seed by
``SeedSequence(master, spawn_key=(geometry_index, target_index, level_index))``
and the realization index then selects the stream inside that seed, so a
realization is reproducible no matter which worker runs it or in what order.

Summaries use linear interpolation between order statistics (the
"inclusive" or type-7 quantile) and whiskers at ``Q1 - 1.5 IQR`` and
``Q3 + 1.5 IQR``; values outside the whiskers are outliers.
"""

from __future__ import annotations

import logging
import math
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from ..errors import ConfigurationError, LeadSteerError
from ..leadfield import NoiseSpec, add_noise, reduce_system
from ..model import ACTIVATION_REFERENCE_A_M2, CurrentPattern, TargetSpec, aligned_target
from ..search import lattice_search
from ..solvers import solve_rp
from .config import MethodEntry, StudyConfig, SweepTargets
from .scenes import scene_field

log = logging.getLogger(__name__)

NOISELESS = math.inf
METRICS = ("gamma", "xi", "theta")


@dataclass(frozen=True)
class StudyTarget:
    target_index: int
    target_id: str
    grid_index: int
    position: tuple[float, float, float]
    orientation: str
    direction: tuple[float, float, float] | None
    magnitude: float


@dataclass(frozen=True)
class WorkUnit:
    geometry_index: int
    geometry: str
    target: StudyTarget
    level_index: int
    psnr_db: float
    realization: int
    noise_seed: int | None


@dataclass(frozen=True)
class StudyRow:
    row_id: int
    geometry: str
    grid: str
    target_id: str
    grid_index: int
    target_x: float
    target_y: float
    target_z: float
    orientation: str
    direction_x: float
    direction_y: float
    direction_z: float
    magnitude: float
    method: str
    variant: str
    psnr_db: float
    realization: int
    noise_seed: int | None
    status: str
    gamma: float
    xi: float
    theta: float
    feasible: bool
    param1_name: str
    param1_db: float
    param2_name: str
    param2_db: float
    currents: tuple[float, ...]
    activation_reference_a_m2: float = ACTIVATION_REFERENCE_A_M2

    @property
    def group(self) -> tuple:
        return (self.geometry, self.target_id, self.orientation, self.variant or self.method,
                self.psnr_db)


@dataclass(frozen=True)
class MetricSummary:
    n: int
    median: float
    q1: float
    q3: float
    iqr: float
    whisker_low: float
    whisker_high: float
    outliers: tuple[float, ...]


@dataclass(frozen=True)
class SummaryBlock:
    geometry: str
    target_id: str
    orientation: str
    method: str
    variant: str
    psnr_db: float
    n_rows: int
    n_failed: int
    metrics: dict


@dataclass(eq=False)
class StudyResult:
    rows: list[StudyRow]
    summaries: list[SummaryBlock]
    config: StudyConfig | None = None
    runtimes: list[float] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)


def derive_noise_seed(master: int, geometry_index: int, target_index: int, level_index: int) -> int:
    """64-bit seed for one (geometry, target, noise level) cell."""
    ss = np.random.SeedSequence(int(master), spawn_key=(geometry_index, target_index, level_index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def expand_targets(config: StudyConfig, field) -> list[StudyTarget]:
    """Concrete targets on the grid of ``field``; positions are resolved here once."""
    grid = field.grid
    out = []
    if isinstance(config.targets, SweepTargets):
        for gi in range(grid.n_positions):
            for o in config.targets.orientations:
                out.append(StudyTarget(len(out), f"p{gi}", gi, tuple(map(float, grid.positions[gi])),
                                       o, None, config.targets.magnitude))
        return out
    for ti, t in enumerate(config.targets):
        if t.snap:
            gi, _ = grid.nearest(t.position)
        else:
            gi, dist = grid.nearest(t.position)
            if dist > 1e-6:
                raise ConfigurationError(
                    f"target {t.id or ti} at {t.position} is {dist:.3g} mm from the nearest grid "
                    f"position {tuple(grid.positions[gi])}; set \"snap\": true to snap it")
        pos = tuple(map(float, grid.positions[gi]))
        base_id = t.id or f"t{ti}"
        for o in t.orientations:
            out.append(StudyTarget(len(out), base_id, gi, pos, o, t.direction, t.magnitude))
    return out


def plan_units(config: StudyConfig, targets: list[StudyTarget]) -> list[WorkUnit]:
    units = []
    for g, geo in enumerate(config.geometries):
        for t in targets:
            if config.noise is None or config.noise.include_noiseless:
                units.append(WorkUnit(g, geo, t, 0, NOISELESS, 0, None))
            if config.noise is not None:
                for li, psnr in enumerate(config.noise.psnr_db, start=1):
                    seed = derive_noise_seed(config.seed, g, t.target_index, li)
                    for r in range(config.noise.realizations):
                        units.append(WorkUnit(g, geo, t, li, psnr, r, seed))
    return units


def unit_system(config: StudyConfig, unit: WorkUnit):
    """Rebuild the reduced system a unit was solved on."""
    field = scene_field(unit.geometry, config.grid, config.conductivity)
    if unit.noise_seed is not None:
        field = add_noise(field, NoiseSpec(unit.psnr_db, unit.noise_seed, unit.realization))
    t = unit.target
    target = aligned_target(t.position, t.orientation, t.magnitude, t.direction)
    return reduce_system(field, target)


def _solve(config: StudyConfig, system, entry: MethodEntry):
    if entry.method == "rp":
        out = solve_rp(system, config.per_contact, config.total_budget)
        return out, ("", math.nan, "", math.nan)
    res = lattice_search(system, entry.space, config.gamma0, config.per_contact, config.total_budget)
    best = res.best
    names = (entry.space.param1.name, entry.space.param2.name)
    return best.outcome, (names[0], best.values_db[0], names[1], best.values_db[1])


def run_unit(config: StudyConfig, unit: WorkUnit) -> list[tuple[dict, float]]:
    """Solve every configured method on one unit; returns (row fields, seconds) pairs."""
    t = unit.target
    system = unit_system(config, unit)
    direction = tuple(float(v) for v in system.target.orientation)
    rows = []
    for entry in config.methods:
        start = time.perf_counter()
        base = dict(
            geometry=unit.geometry, grid=config.grid.get("resolution", "low"), target_id=t.target_id,
            grid_index=t.grid_index, target_x=t.position[0], target_y=t.position[1],
            target_z=t.position[2], orientation=t.orientation, direction_x=direction[0],
            direction_y=direction[1], direction_z=direction[2], magnitude=t.magnitude,
            method=entry.method, variant=entry.variant or "", psnr_db=unit.psnr_db,
            realization=unit.realization, noise_seed=unit.noise_seed,
        )
        try:
            outcome, (n1, v1, n2, v2) = _solve(config, system, entry)
        except LeadSteerError as exc:
            status = getattr(exc, "status", None) or type(exc).__name__
            log.warning("%s %s %s psnr=%s r=%d failed: %s", unit.geometry, t.target_id,
                        entry.label, unit.psnr_db, unit.realization, exc)
            base.update(status=str(status), gamma=math.nan, xi=math.nan, theta=math.nan,
                        feasible=False, param1_name="", param1_db=math.nan, param2_name="",
                        param2_db=math.nan, currents=())
        else:
            m = outcome.metrics
            base.update(status="ok", gamma=m.gamma, xi=m.xi, theta=m.theta,
                        feasible=bool(m.gamma >= config.gamma0), param1_name=n1, param1_db=v1,
                        param2_name=n2, param2_db=v2,
                        currents=tuple(float(v) for v in outcome.pattern.currents))
        rows.append((base, time.perf_counter() - start))
    return rows


def _quartiles(v: np.ndarray) -> tuple[float, float, float]:
    """Type-7 quartiles of sorted ``v``; the quarter-step position is kept exact."""
    n = v.size
    out = []
    for i in (1, 2, 3):
        j, frac = divmod(i * (n - 1), 4)
        if frac == 0:
            out.append(float(v[j]))
        else:
            out.append(float((v[j] * (4 - frac) + v[j + 1] * frac) / 4))
    return tuple(out)


def quartile_summary(values) -> MetricSummary:
    """Median, type-7 quartiles, 1.5-IQR whiskers and outliers of finite ``values``."""
    v = np.asarray([x for x in values if math.isfinite(x)], dtype=float)
    if v.size == 0:
        nan = math.nan
        return MetricSummary(0, nan, nan, nan, nan, nan, nan, ())
    q1, med, q3 = _quartiles(np.sort(v))
    iqr = q3 - q1
    lo, hi = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    outliers = tuple(float(x) for x in v if x < lo or x > hi)
    return MetricSummary(int(v.size), med, q1, q3, iqr, lo, hi, outliers)


def summarize(rows: list[StudyRow]) -> list[SummaryBlock]:
    """One block per (geometry, target, orientation, method variant, noise level), in row order."""
    groups: dict[tuple, list[StudyRow]] = {}
    for r in rows:
        groups.setdefault(r.group, []).append(r)
    out = []
    for key, members in groups.items():
        first = members[0]
        metrics = {name: quartile_summary([getattr(r, name) for r in members]) for name in METRICS}
        out.append(SummaryBlock(first.geometry, first.target_id, first.orientation, first.method,
                                first.variant, first.psnr_db, len(members),
                                sum(r.status != "ok" for r in members), metrics))
    return out


def run_study(config: StudyConfig, workers: int = 1) -> StudyResult:
    """Run every unit of ``config`` and return rows in plan order plus summaries.

    ``workers > 1`` distributes units over processes; the output does not
    depend on the worker count.
    """
    if workers < 1:
        raise ConfigurationError(f"worker count must be >= 1, got {workers}")
    started = time.time()
    t0 = time.perf_counter()
    first = scene_field(config.geometries[0], config.grid, config.conductivity)
    targets = expand_targets(config, first)
    for geo in config.geometries[1:]:
        # every geometry shares the grid, so targets resolve identically
        if scene_field(geo, config.grid, config.conductivity).grid != first.grid:
            raise ConfigurationError("all geometries of a study must share one grid")
    units = plan_units(config, targets)
    log.info("study %s: %d units x %d methods on %d worker(s)", config.name, len(units),
             len(config.methods), workers)
    job = partial(run_unit, config)
    if workers == 1 or len(units) <= 1:
        results = [job(u) for u in units]
    else:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            results = list(pool.map(job, units, chunksize=1))
    rows, runtimes = [], []
    for unit_rows in results:
        for fields, seconds in unit_rows:
            rows.append(StudyRow(row_id=len(rows), **fields))
            runtimes.append(seconds)
    metadata = {
        "started_unix": started,
        "wall_seconds": time.perf_counter() - t0,
        "workers": workers,
        "n_units": len(units),
        "activation_reference_a_m2": ACTIVATION_REFERENCE_A_M2,
    }
    return StudyResult(rows, summarize(rows), config, runtimes, metadata)


def row_pattern(row: StudyRow, config: StudyConfig) -> CurrentPattern:
    return CurrentPattern(np.asarray(row.currents), config.per_contact, config.total_budget)


def row_system(row: StudyRow, config: StudyConfig):
    """Re-derive the reduced system a row was solved on from its stored fields."""
    field = scene_field(row.geometry, config.grid, config.conductivity)
    if row.noise_seed is not None:
        field = add_noise(field, NoiseSpec(row.psnr_db, row.noise_seed, row.realization))
    direction = (row.direction_x, row.direction_y, row.direction_z)
    target = TargetSpec((row.target_x, row.target_y, row.target_z), direction, "custom",
                        row.magnitude)
    return reduce_system(field, target)
