"""Study configuration: JSON loading, schema validation and normalization."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema

from ..errors import ConfigurationError
from ..model import GAMMA0_DEFAULT, PER_CONTACT_BOUND_MA, TOTAL_BUDGET_MA, TARGET_MAGNITUDE_DEFAULT
from ..search import DEFAULT_STEPS, PRESETS, ParamAxis, SearchSpace, preset

DEFAULT_SEED = 0
DEFAULT_VARIANT = {"l1l1": "l1l1_b", "tls": "tls_default"}


@lru_cache(maxsize=1)
def study_schema() -> dict:
    text = resources.files(__package__).joinpath("study_schema.json").read_text(encoding="utf-8")
    return json.loads(text)


@dataclass(frozen=True)
class TargetEntry:
    """One requested target position with the orientations to study there."""

    position: tuple[float, float, float]
    orientations: tuple[str, ...] = ("parallel",)
    direction: tuple[float, float, float] | None = None
    magnitude: float = TARGET_MAGNITUDE_DEFAULT
    snap: bool = False
    id: str | None = None


@dataclass(frozen=True)
class SweepTargets:
    """Every grid position, each with the listed orientations."""

    orientations: tuple[str, ...] = ("parallel",)
    magnitude: float = TARGET_MAGNITUDE_DEFAULT


@dataclass(frozen=True)
class MethodEntry:
    method: str
    variant: str | None = None
    space: SearchSpace | None = None

    @property
    def label(self) -> str:
        return self.variant or self.method


@dataclass(frozen=True)
class NoiseLevels:
    psnr_db: tuple[float, ...]
    realizations: int = 1
    include_noiseless: bool = True


@dataclass(frozen=True)
class StudyConfig:
    geometries: tuple[str, ...]
    targets: tuple[TargetEntry, ...] | SweepTargets
    methods: tuple[MethodEntry, ...]
    grid: dict = field(default_factory=lambda: {"resolution": "low"})
    conductivity: float = 0.2
    noise: NoiseLevels | None = None
    gamma0: float = GAMMA0_DEFAULT
    per_contact: float = PER_CONTACT_BOUND_MA
    total_budget: float = TOTAL_BUDGET_MA
    search_steps: int = DEFAULT_STEPS
    output_dir: str = "."
    stem: str = "study"
    seed: int = DEFAULT_SEED
    name: str = "study"
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def with_seed(self, seed: int) -> "StudyConfig":
        raw = dict(self.raw, seed=int(seed))
        return parse_config(raw)

    def to_dict(self) -> dict:
        return dict(self.raw)


def _line_of(text: str, path) -> int | None:
    """Best-effort line number of a JSON path, by following quoted keys in order."""
    pos = 0
    found = None
    for key in path:
        if not isinstance(key, str):
            continue
        i = text.find(json.dumps(key), pos)
        if i < 0:
            break
        pos, found = i, i
    return None if found is None else text.count("\n", 0, found) + 1


def _path_str(path) -> str:
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else p)
    return out or "<root>"


def _axis(base: ParamAxis, override: dict | None) -> ParamAxis:
    if not override:
        return base
    return ParamAxis(base.name, float(override.get("min_db", base.min_db)),
                     float(override.get("max_db", base.max_db)),
                     int(override.get("steps", base.steps)),
                     tuple(override["values_db"]) if "values_db" in override else None)


def _method(entry: dict, steps: int, where: str) -> MethodEntry:
    method = entry["method"]
    variant = entry.get("variant")
    if method == "rp":
        if variant is not None or "param1" in entry or "param2" in entry:
            raise ConfigurationError(f"{where}: rp takes no variant or parameters")
        return MethodEntry("rp")
    variant = variant or DEFAULT_VARIANT[method]
    if PRESETS[variant][0] != method:
        raise ConfigurationError(f"{where}: preset {variant!r} belongs to {PRESETS[variant][0]!r}, not {method!r}")
    base = preset(variant, steps)
    space = SearchSpace(method, _axis(base.param1, entry.get("param1")),
                        _axis(base.param2, entry.get("param2")))
    return MethodEntry(method, variant, space)


def parse_config(data: dict, text: str | None = None) -> StudyConfig:
    """Validate a decoded config against the schema and normalize it.

    ``text`` is the original JSON source, used only to attach line numbers
    to diagnostics.
    """
    validator = jsonschema.Draft202012Validator(study_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for e in errors:
            where = _path_str(e.absolute_path)
            line = _line_of(text, e.absolute_path) if text else None
            loc = f"line {line}, " if line else ""
            lines.append(f"{loc}field {where}: {e.message}")
        raise ConfigurationError("invalid study config:\n  " + "\n  ".join(lines))

    geos = data["geometry"]
    geometries = (geos,) if isinstance(geos, str) else tuple(geos)
    steps = int(data.get("search_steps", DEFAULT_STEPS))

    t = data["targets"]
    if isinstance(t, dict):
        targets = SweepTargets(tuple(t.get("orientations", ["parallel"])),
                               float(t.get("magnitude", TARGET_MAGNITUDE_DEFAULT)))
    else:
        out = []
        for i, e in enumerate(t):
            if "direction" in e and "orientations" in e:
                raise ConfigurationError(f"targets[{i}]: give either direction or orientations, not both")
            out.append(TargetEntry(
                tuple(float(v) for v in e["position"]),
                tuple(e.get("orientations", ["parallel"])) if "direction" not in e else ("custom",),
                tuple(float(v) for v in e["direction"]) if "direction" in e else None,
                float(e.get("magnitude", TARGET_MAGNITUDE_DEFAULT)),
                bool(e.get("snap", False)),
                e.get("id"),
            ))
        ids = [x.id for x in out if x.id is not None]
        if len(ids) != len(set(ids)):
            raise ConfigurationError("target ids must be unique")
        targets = tuple(out)

    methods = tuple(_method(m, steps, f"methods[{i}]") for i, m in enumerate(data["methods"]))
    labels = [m.label for m in methods]
    if len(labels) != len(set(labels)):
        raise ConfigurationError(f"methods repeat a variant: {labels}")

    noise = None
    nz = data.get("noise")
    if nz is not None:
        levels = tuple(float(v) for v in nz["psnr_db"])
        if any(math.isnan(v) or v == -math.inf for v in levels):
            raise ConfigurationError("noise psnr_db levels must be finite")
        noise = NoiseLevels(levels, int(nz.get("realizations", 1)), bool(nz.get("include_noiseless", True)))

    bounds = data.get("bounds", {})
    out_cfg = data.get("output", {})
    return StudyConfig(
        geometries=geometries,
        targets=targets,
        methods=methods,
        grid=dict(data.get("grid", {"resolution": "low"})),
        conductivity=float(data.get("conductivity_s_m", 0.2)),
        noise=noise,
        gamma0=float(data.get("gamma0", GAMMA0_DEFAULT)),
        per_contact=float(bounds.get("per_contact_ma", PER_CONTACT_BOUND_MA)),
        total_budget=float(bounds.get("total_budget_ma", TOTAL_BUDGET_MA)),
        search_steps=steps,
        output_dir=str(out_cfg.get("directory", ".")),
        stem=str(out_cfg.get("stem", "study")),
        seed=int(data.get("seed", DEFAULT_SEED)),
        name=str(data.get("name", "study")),
        raw=json.loads(json.dumps(data)),
    )


def load_config(path) -> StudyConfig:
    """Read and validate a JSON study config; errors name the file, line and field."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        return parse_config(data, text)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
