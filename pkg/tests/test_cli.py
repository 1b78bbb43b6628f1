import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from leadsteer.harness.cli import main
from leadsteer.leadfield import contacts8, import_leadfield, low_grid, synthesize_leadfield


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_rp_prints_pair_labels(capsys):
    code, out, _ = run(capsys, "solve", "--geometry", "contacts8", "--target", "I")
    assert code == 0
    assert "anode: 2c  cathode: 3c" in out
    assert "gamma: 38.80441928611348" in out


def test_solve_json_and_lp_dump(capsys, tmp_path):
    dump = tmp_path / "p.lp"
    code, out, _ = run(capsys, "solve", "--geometry", "contacts8", "--variant", "l1l1_b",
                       "--params-db", "-60", "-5", "--lp-dump", str(dump), "--format", "json")
    assert code == 0
    doc = json.loads(out)
    currents = np.array(doc["currents_ma"] if "currents_ma" in doc else doc["currents"], dtype=float)
    assert abs(currents.sum()) < 1e-9 and np.abs(currents).sum() <= 4 * (1 + 1e-9)
    assert dump.read_text().startswith("\\")


def test_vta_default_ladder_counts(capsys):
    code, out, _ = run(capsys, "vta", "--geometry", "contacts8", "--format", "json")
    assert code == 0
    assert [r["members"] for r in json.loads(out)["levels"]] == [12, 40, 98, 240]


def test_vta_single_level(capsys):
    code, out, _ = run(capsys, "vta", "--geometry", "contacts8", "--delta-db", "-30")
    assert code == 0 and " 98 " in out


def test_geometry_listing(capsys):
    code, out, _ = run(capsys, "geometry", "--geometry", "contacts40", "--format", "csv")
    assert code == 0
    assert len(list(csv.DictReader(io.StringIO(out)))) == 40


def test_synth_writes_field(capsys, tmp_path):
    path = tmp_path / "f.npz"
    code, out, _ = run(capsys, "synth", "--geometry", "contacts8", "--psnr-db", "30", "--seed", "3",
                       "--out", str(path))
    assert code == 0 and path.exists()
    field = import_leadfield(path)
    assert field.matrix.shape == (756, 8)
    clean = synthesize_leadfield(contacts8(), low_grid()).matrix
    assert 0 < np.abs(field.matrix - clean).max() < np.abs(clean).max()


def test_search_prints_table(capsys):
    code, out, _ = run(capsys, "search", "--geometry", "contacts8", "--variant", "l1l1_b", "--steps", "2")
    assert code == 0
    assert out.startswith("best at (0, 0)")
    assert out.count("\n 0  ") + out.count("\n 1  ") == 4


def test_unknown_subcommand_exits_with_usage():
    proc = subprocess.run([sys.executable, "-m", "leadsteer", "bogus"], capture_output=True, text=True)
    assert proc.returncode != 0
    assert "usage:" in proc.stderr


def test_invalid_config_reports_field(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"geometry": "contacts8", "targets": [], "methods": [{"method": "rp"}],
                                "gamma0": "high"}, indent=1))
    code, _, err = run(capsys, "study", "--config", str(path))
    assert code == 2
    assert "gamma0" in err and "line 9" in err


def test_missing_config_is_an_error(capsys, tmp_path):
    code, _, err = run(capsys, "study", "--config", str(tmp_path / "none.json"))
    assert code == 2 and "error" in err


def test_study_with_realizations(capsys, tmp_path):
    cfg = {
        "geometry": "contacts8",
        "targets": [{"id": "I", "position": [-1.667, -1.667, 0.0], "snap": True}],
        "methods": [{"method": "rp"}],
        "noise": {"psnr_db": [40], "realizations": 20, "include_noiseless": False},
        "seed": 5,
        "output": {"directory": str(tmp_path / "ignored"), "stem": "r"},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    out_dir = tmp_path / "out"
    code, _, _ = run(capsys, "study", "--config", str(path), "--out", str(out_dir), "--format", "both")
    assert code == 0
    rows = list(csv.DictReader((out_dir / "r.csv").open()))
    assert len(rows) == 20
    assert {r["realization"] for r in rows} == {str(i) for i in range(20)}
    summary = list(csv.DictReader((out_dir / "r_summary.csv").open()))
    assert len(summary) == 1 and summary[0]["n_rows"] == "20"
    assert (out_dir / "r.json").exists() and (out_dir / "r_meta.json").exists()
