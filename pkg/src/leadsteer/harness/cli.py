"""Command-line entry points.

Subcommands: ``geometry``, ``synth``, ``solve``, ``search``, ``study`` and
``vta``. Run ``leadsteer <subcommand> --help`` for the flags of each.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from ..errors import LeadSteerError
from ..leadfield import (
    NoiseSpec,
    add_noise,
    attenuation_set,
    build_geometry,
    db_to_ratio,
    dynamic_range_bound,
    export_leadfield,
    export_leadfield_csv,
    reduce_system,
)
from ..leadfield.geometry import GEOMETRIES
from ..lp import build_l1l1_lp, write_lp
from ..model import GAMMA0_DEFAULT, PER_CONTACT_BOUND_MA, TOTAL_BUDGET_MA
from ..search import PRESETS, db_to_linear, lattice_search, preset
from ..solvers import solve_l1l1, solve_rp, solve_tls
from .config import load_config
from .emit import FORMATS, emit
from .scenes import DEMO_TARGET, DESK_TARGETS, scene_field, scene_target
from .study import run_study

log = logging.getLogger("leadsteer")

VTA_LADDER_DB = (-10.0, -20.0, -30.0, -40.0)
DEFAULT_VARIANT = {"l1l1": "l1l1_b", "tls": "tls_default"}


def _json_out(obj) -> str:
    def fix(v):
        if isinstance(v, float) and not math.isfinite(v):
            return repr(v)
        if isinstance(v, dict):
            return {k: fix(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [fix(x) for x in v]
        if isinstance(v, np.generic):
            return fix(v.item())
        if isinstance(v, np.ndarray):
            return fix(v.tolist())
        return v
    return json.dumps(fix(obj), indent=1)


def _point(text: str):
    if text in DESK_TARGETS:
        return text
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        vals = ()
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(
            f"target must be x,y,z in mm or one of {sorted(DESK_TARGETS)}, got {text!r}")
    return vals


def _scene_args(p: argparse.ArgumentParser, target: bool = True) -> None:
    p.add_argument("--geometry", choices=sorted(GEOMETRIES), default="contacts8")
    p.add_argument("--grid", choices=("low", "high"), default="low")
    if target:
        p.add_argument("--target", type=_point, default=DEMO_TARGET,
                       help="x,y,z in mm (snapped to the grid) or a named point: "
                            + ", ".join(sorted(DESK_TARGETS)))
        p.add_argument("--orientation", choices=("parallel", "perpendicular"), default="parallel")
    p.add_argument("--psnr-db", type=float, default=None, help="add noise at this PSNR")
    p.add_argument("--seed", type=int, default=0, help="noise seed")
    p.add_argument("--realization", type=int, default=0)


def _bounds_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--per-contact", type=float, default=PER_CONTACT_BOUND_MA)
    p.add_argument("--total-budget", type=float, default=TOTAL_BUDGET_MA)
    p.add_argument("--gamma0", type=float, default=GAMMA0_DEFAULT)


def _field(args):
    field = scene_field(args.geometry, {"resolution": args.grid})
    if args.psnr_db is not None:
        field = add_noise(field, NoiseSpec(args.psnr_db, args.seed, args.realization))
    return field


def _system(args):
    field = _field(args)
    return reduce_system(field, scene_target(field, args.target, args.orientation))


def _resolve_method(args, fallback: str) -> None:
    if args.method is None:
        args.method = PRESETS[args.variant][0] if args.variant else fallback


def _variant(args) -> str:
    v = args.variant or DEFAULT_VARIANT[args.method]
    if PRESETS[v][0] != args.method:
        raise LeadSteerError(f"variant {v!r} does not belong to method {args.method!r}")
    return v


def _outcome_dict(out) -> dict:
    m = out.metrics
    d = {"method": out.method_tag, "gamma": m.gamma, "xi": m.xi, "theta": m.theta,
         "currents": [float(v) for v in out.pattern.currents],
         "hyperparameters": dict(out.hyperparameters)}
    for k in ("anode_label", "cathode_label"):
        if k in out.diagnostics:
            d[k] = out.diagnostics[k]
    return d


def _print_outcome(d: dict, labels) -> None:
    if "anode_label" in d:
        print(f"anode: {d['anode_label']}  cathode: {d['cathode_label']}")
    print(f"gamma: {d['gamma']!r}\nxi: {d['xi']!r}\ntheta: {d['theta']!r}")
    for k, v in d["hyperparameters"].items():
        if k.endswith("_db"):
            print(f"{k}: {v!r}")
    print("currents_ma: " + " ".join(f"{lab}={v:.6g}" for lab, v in zip(labels, d["currents"])))


def cmd_geometry(args) -> int:
    arr = build_geometry(args.geometry)
    if args.format == "json":
        text = _json_out(arr.to_dict())
    else:
        lines = ["label,row,sector,x_mm,y_mm,z_mm,normal_x,normal_y,normal_z"]
        for c in arr.contacts:
            xyz = ",".join(repr(float(v)) for v in (*c.center, *c.normal))
            lines.append(f"{c.label},{c.row},{c.sector},{xyz}")
        text = "\n".join(lines)
    return _emit_text(text, args.out)


def _emit_text(text: str, out) -> int:
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
        print(f"wrote {out}")
    else:
        print(text)
    return 0


def cmd_synth(args) -> int:
    field = _field(args)
    if args.format == "csv":
        export_leadfield_csv(field, args.out)
    else:
        export_leadfield(field, args.out)
    print(f"wrote {args.out}: N={field.matrix.shape[0]} K={field.matrix.shape[1]}")
    return 0


def cmd_solve(args) -> int:
    _resolve_method(args, "rp")
    if args.method == "rp" and args.variant:
        raise LeadSteerError("rp takes no variant")
    system = _system(args)
    labels = system.parent.contacts.labels
    if args.method == "rp":
        out = solve_rp(system, args.per_contact, args.total_budget)
    elif args.params_db is not None:
        v1, v2 = args.params_db
        if args.method == "tls":
            out = solve_tls(system, db_to_linear(v1), db_to_linear(v2), args.per_contact, args.total_budget)
        else:
            out = solve_l1l1(system, db_to_linear(v1), db_to_linear(v2), args.per_contact, args.total_budget)
    else:
        res = lattice_search(system, preset(_variant(args), args.steps), args.gamma0,
                             args.per_contact, args.total_budget)
        out = res.best.outcome
    if args.lp_dump:
        if args.method != "l1l1":
            raise LeadSteerError("--lp-dump applies to the l1l1 method only")
        h = out.hyperparameters
        write_lp(build_l1l1_lp(system, h["alpha"], h["epsilon"], args.per_contact, args.total_budget),
                 args.lp_dump)
        log.info("wrote LP dump to %s", args.lp_dump)
    d = _outcome_dict(out)
    if args.format == "json":
        print(_json_out(d))
    else:
        _print_outcome(d, labels)
    return 0


def cmd_search(args) -> int:
    _resolve_method(args, "l1l1")
    system = _system(args)
    space = preset(_variant(args), args.steps)
    res = lattice_search(system, space, args.gamma0, args.per_contact, args.total_budget)
    n1, n2 = space.param1.name, space.param2.name
    grid = [{"i": c.grid_coordinates[0], "j": c.grid_coordinates[1], f"{n1}_db": c.values_db[0],
             f"{n2}_db": c.values_db[1], "gamma": c.outcome.metrics.gamma, "xi": c.outcome.metrics.xi,
             "theta": c.outcome.metrics.theta, "feasible": c.feasible} for c in res.candidates]
    best = res.best
    doc = {"variant": _variant(args), "best": dict(_outcome_dict(best.outcome), feasible=best.feasible,
           grid_coordinates=list(best.grid_coordinates)),
           "grid": grid, "failures": {f"{i},{j}": s for (i, j), s in res.failures.items()}}
    if args.format == "json":
        print(_json_out(doc))
        return 0
    print(f"best at ({best.grid_coordinates[0]}, {best.grid_coordinates[1]}) "
          f"{n1}_db={best.values_db[0]!r} {n2}_db={best.values_db[1]!r} feasible={best.feasible}")
    _print_outcome(doc["best"], system.parent.contacts.labels)
    print(f"\n{'i':>2} {'j':>2} {n1 + '_db':>12} {n2 + '_db':>12} {'gamma':>12} {'xi':>12} {'theta':>12} feas")
    for g in grid:
        print(f"{g['i']:>2} {g['j']:>2} {g[n1 + '_db']:>12.4g} {g[n2 + '_db']:>12.4g} {g['gamma']:>12.6g} "
              f"{g['xi']:>12.6g} {g['theta']:>12.6g} {'y' if g['feasible'] else 'n'}")
    for key, status in doc["failures"].items():
        print(f"failed ({key}): {status}")
    return 0


def cmd_study(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    result = run_study(config, workers=args.parallel)
    out_dir = args.out or config.output_dir
    formats = FORMATS if args.format == "both" else (args.format,)
    paths = emit(result, out_dir, config.stem, formats)
    failed = sum(r.status != "ok" for r in result.rows)
    print(f"{len(result.rows)} rows ({failed} failed), {len(result.summaries)} summary blocks")
    for kind, p in paths.items():
        print(f"{kind}: {p}")
    return 0


def cmd_vta(args) -> int:
    field = _field(args)
    ladder = args.delta_db or list(VTA_LADDER_DB)
    idx = None
    if args.target is not None:
        idx, _ = field.grid.nearest(DESK_TARGETS.get(args.target, args.target)
                                     if isinstance(args.target, str) else args.target)
    rows = []
    for ddb in ladder:
        aset = attenuation_set(field, db_to_ratio(ddb))
        row = {"delta_db": ddb, "delta": aset.delta, "members": len(aset),
               "threshold": aset.threshold}
        if idx is not None:
            row["target_index"] = idx
            row["target_member"] = idx in aset
            try:
                row["epsilon_min"] = dynamic_range_bound(aset, idx)
            except LeadSteerError as exc:
                row["epsilon_min"] = math.nan
                log.warning("no epsilon bound at %d: %s", idx, exc)
        rows.append(row)
    if args.format == "json":
        print(_json_out({"geometry": args.geometry, "grid": args.grid,
                         "positions": field.grid.n_positions, "levels": rows}))
        return 0
    print(f"{'delta_db':>9} {'members':>8} {'threshold':>12}" + ("  epsilon_min" if idx is not None else ""))
    for r in rows:
        line = f"{r['delta_db']:>9.4g} {r['members']:>8d} {r['threshold']:>12.6g}"
        if idx is not None:
            line += f"  {r['epsilon_min']:.6g}"
        print(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leadsteer", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")

    p = sub.add_parser("geometry", help="print or export a contact array")
    p.add_argument("--geometry", choices=sorted(GEOMETRIES), default="contacts8")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_geometry)

    p = sub.add_parser("synth", help="build a synthetic lead field and export it")
    _scene_args(p, target=False)
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("solve", help="solve one target with one method")
    _scene_args(p)
    _bounds_args(p)
    p.add_argument("--method", choices=("rp", "tls", "l1l1"),
                   help="default: implied by --variant, else rp")
    p.add_argument("--variant", choices=sorted(PRESETS))
    p.add_argument("--params-db", type=float, nargs=2, metavar=("P1_DB", "P2_DB"),
                   help="fixed hyperparameters in dB instead of a lattice search")
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--lp-dump", help="write the L1L1 LP in CPLEX LP format")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("search", help="lattice search; prints the best point and the full grid")
    _scene_args(p)
    _bounds_args(p)
    p.add_argument("--method", choices=("tls", "l1l1"),
                   help="default: implied by --variant, else l1l1")
    p.add_argument("--variant", choices=sorted(PRESETS))
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("study", help="run a study config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--out", help="output directory (default: the config's)")
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    p.add_argument("--parallel", type=int, default=1, metavar="WORKERS")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("vta", help="attenuation-set sizes and epsilon bounds over a delta ladder")
    _scene_args(p, target=False)
    p.add_argument("--target", type=_point, default=None)
    p.add_argument("--delta-db", type=float, action="append",
                   help="attenuation level in dB; repeat for a ladder (default -10 -20 -30 -40)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_vta)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (LeadSteerError, OSError) as exc:
        print(f"leadsteer {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
