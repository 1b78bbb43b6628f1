"""Serialization of study results.

Files written for stem ``S``:

``S.csv``
    One line per row, columns in :data:`ROW_COLUMNS` order.
``S_summary.csv``
    One line per summary block, columns in :data:`SUMMARY_COLUMNS` order.
``S.json``
    Config, rows and summaries; a lossless mirror of the result.
``S_meta.json``
    Timing and environment data. This is the only file whose content
    changes between identical runs.

Floats are written with ``repr`` (shortest round-trip form). In JSON,
non-finite floats become the strings ``"nan"``, ``"inf"`` and ``"-inf"``;
in CSV they are written the same way. Booleans are ``true``/``false``,
absent values are empty, and the contact currents are joined with ``;``.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import platform
import sys
from pathlib import Path

from .. import __version__
from .study import METRICS, MetricSummary, StudyResult, StudyRow, SummaryBlock

ROW_COLUMNS = tuple(f.name for f in dataclasses.fields(StudyRow))
SUMMARY_STATS = ("n", "median", "q1", "q3", "iqr", "whisker_low", "whisker_high", "outliers")
SUMMARY_COLUMNS = ("geometry", "target_id", "orientation", "method", "variant", "psnr_db",
                   "n_rows", "n_failed") + tuple(f"{m}_{s}" for m in METRICS for s in SUMMARY_STATS)
FORMATS = ("csv", "json")
JSON_FORMAT_TAG = "leadsteer-study v1"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ";".join(_cell(x) for x in v)
    return str(v)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def row_cells(row: StudyRow) -> list[str]:
    return [_cell(getattr(row, c)) for c in ROW_COLUMNS]


def summary_cells(block: SummaryBlock) -> list[str]:
    cells = [_cell(getattr(block, c)) for c in SUMMARY_COLUMNS[:8]]
    for m in METRICS:
        s = block.metrics[m]
        cells.extend(_cell(getattr(s, k)) for k in SUMMARY_STATS)
    return cells


def _csv_text(header, lines) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(lines)
    return buf.getvalue()


def rows_csv(rows) -> str:
    return _csv_text(ROW_COLUMNS, (row_cells(r) for r in rows))


def summaries_csv(blocks) -> str:
    return _csv_text(SUMMARY_COLUMNS, (summary_cells(b) for b in blocks))


def row_to_dict(row: StudyRow) -> dict:
    d = dataclasses.asdict(row)
    d["currents"] = list(row.currents)
    return d


def summary_to_dict(block: SummaryBlock) -> dict:
    d = {c: getattr(block, c) for c in SUMMARY_COLUMNS[:8]}
    d["metrics"] = {m: dict(dataclasses.asdict(block.metrics[m]),
                            outliers=list(block.metrics[m].outliers)) for m in METRICS}
    return d


def result_to_json(result: StudyResult) -> str:
    doc = {
        "format": JSON_FORMAT_TAG,
        "config": result.config.to_dict() if result.config is not None else None,
        "columns": list(ROW_COLUMNS),
        "rows": [row_to_dict(r) for r in result.rows],
        "summaries": [summary_to_dict(b) for b in result.summaries],
    }
    return json.dumps(_jsonable(doc), indent=1, allow_nan=False) + "\n"


def _num(v):
    return float(v) if isinstance(v, str) else v


def row_from_dict(d: dict) -> StudyRow:
    kw = dict(d)
    for f in dataclasses.fields(StudyRow):
        if f.type == "float":
            kw[f.name] = float(_num(kw[f.name]))
    kw["currents"] = tuple(float(x) for x in kw["currents"])
    return StudyRow(**kw)


def summary_from_dict(d: dict) -> SummaryBlock:
    metrics = {}
    for m, s in d["metrics"].items():
        vals = {k: (float(_num(v)) if k not in ("n", "outliers") else v) for k, v in s.items()}
        vals["outliers"] = tuple(float(_num(x)) for x in s["outliers"])
        metrics[m] = MetricSummary(**vals)
    return SummaryBlock(d["geometry"], d["target_id"], d["orientation"], d["method"], d["variant"],
                        float(_num(d["psnr_db"])), d["n_rows"], d["n_failed"], metrics)


def result_from_json(text: str) -> StudyResult:
    """Inverse of :func:`result_to_json`; the config is parsed and validated again."""
    from .config import parse_config

    doc = json.loads(text)
    if doc.get("format") != JSON_FORMAT_TAG:
        raise ValueError(f"not a study result document (format {doc.get('format')!r})")
    config = parse_config(doc["config"]) if doc["config"] is not None else None
    return StudyResult([row_from_dict(r) for r in doc["rows"]],
                       [summary_from_dict(s) for s in doc["summaries"]], config)


def parse_rows_csv(text: str) -> list[StudyRow]:
    """Rows back from :func:`rows_csv` output."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != ROW_COLUMNS:
        raise ValueError(f"unexpected CSV header {header}")
    types = {f.name: f.type for f in dataclasses.fields(StudyRow)}
    out = []
    for cells in reader:
        kw = {}
        for name, cell in zip(header, cells):
            t = types[name]
            if name == "currents":
                kw[name] = tuple(float(x) for x in cell.split(";")) if cell else ()
            elif t == "float":
                kw[name] = float(cell)
            elif t == "int":
                kw[name] = int(cell)
            elif t == "int | None":
                kw[name] = int(cell) if cell else None
            elif t == "bool":
                kw[name] = cell == "true"
            else:
                kw[name] = cell
        out.append(StudyRow(**kw))
    return out


def metadata_json(result: StudyResult) -> str:
    doc = dict(result.metadata)
    doc.update({
        "package_version": __version__,
        "python": sys.version.split()[0],
        "platform": platform.platform(),
        "row_runtime_seconds": list(result.runtimes),
    })
    return json.dumps(_jsonable(doc), indent=1, allow_nan=False) + "\n"


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def emit(result: StudyResult, out_dir, stem: str = "study", formats=FORMATS) -> dict[str, Path]:
    """Write the requested formats plus the metadata file; returns the written paths."""
    out_dir = Path(out_dir)
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ValueError(f"unknown output format(s) {sorted(unknown)}; expected {FORMATS}")
    paths = {}
    if "csv" in formats:
        paths["csv"] = _write(out_dir / f"{stem}.csv", rows_csv(result.rows))
        paths["summary_csv"] = _write(out_dir / f"{stem}_summary.csv", summaries_csv(result.summaries))
    if "json" in formats:
        paths["json"] = _write(out_dir / f"{stem}.json", result_to_json(result))
    paths["metadata"] = _write(out_dir / f"{stem}_meta.json", metadata_json(result))
    return paths
