"""Text interchange format for lead fields.

Layout::

    LEADFIELD v1 N=<rows> K=<columns>
    <K floats>            (N lines, shortest round-trip decimal, '.' separator)
    METADATA
    <one JSON object: provenance, grid, contacts, extra metadata>

A matrix-only CSV variant is provided for exchange with other tools.
"""

from __future__ import annotations

import csv
import json
import math
import re
from pathlib import Path

import numpy as np

from ..errors import LeadFieldFormatError
from ..model import ContactArray, DofGrid
from .synth import LeadField

MAGIC = "LEADFIELD v1"
_HEADER = re.compile(r"^LEADFIELD v1 N=(\d+) K=(\d+)$")
_TRAILER = "METADATA"


def _fmt(v: float) -> str:
    return repr(float(v))


def _parse_float(token: str, row: int, col: int) -> float:
    try:
        v = float(token)
    except ValueError:
        raise LeadFieldFormatError(f"cannot parse {token!r} as a number", row, col) from None
    if not math.isfinite(v):
        raise LeadFieldFormatError(f"non-finite entry {token!r}", row, col)
    return v


def _metadata(field: LeadField) -> dict:
    return {
        "provenance": field.provenance,
        "grid": {
            "resolution_tag": field.grid.resolution_tag,
            "positions": field.grid.positions.tolist(),
        },
        "contacts": field.contacts.to_dict(),
        "extra": dict(field.metadata),
    }


def export_leadfield(field: LeadField, path) -> None:
    n, k = field.shape
    lines = [f"{MAGIC} N={n} K={k}"]
    lines.extend(" ".join(_fmt(v) for v in row) for row in field.matrix)
    lines.append(_TRAILER)
    lines.append(json.dumps(_metadata(field), sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def import_leadfield(path) -> LeadField:
    """Read a file written by :func:`export_leadfield`.

    Row and column numbers in error messages are 0-based matrix indices.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise LeadFieldFormatError("empty file")
    m = _HEADER.match(lines[0].strip())
    if m is None:
        raise LeadFieldFormatError(f"malformed header {lines[0]!r}; expected '{MAGIC} N=<int> K=<int>'")
    n, k = int(m.group(1)), int(m.group(2))
    try:
        trailer = lines.index(_TRAILER, 1)
    except ValueError:
        raise LeadFieldFormatError("missing METADATA trailer") from None
    body = [ln for ln in lines[1:trailer] if ln.strip()]
    if len(body) != n:
        raise LeadFieldFormatError(f"header declares N={n} rows but the payload has {len(body)}")
    L = np.empty((n, k))
    for i, ln in enumerate(body):
        tokens = ln.split()
        if len(tokens) != k:
            raise LeadFieldFormatError(
                f"header declares K={k} columns but the row has {len(tokens)}", i)
        for j, tok in enumerate(tokens):
            L[i, j] = _parse_float(tok, i, j)
    try:
        meta = json.loads("\n".join(lines[trailer + 1:]))
    except json.JSONDecodeError as exc:
        raise LeadFieldFormatError(f"metadata is not valid JSON: {exc}") from None
    try:
        grid = DofGrid(np.array(meta["grid"]["positions"], dtype=float).reshape(-1, 3),
                       meta["grid"]["resolution_tag"])
        contacts = ContactArray.from_dict(meta["contacts"])
        provenance = meta["provenance"]
    except (KeyError, TypeError) as exc:
        raise LeadFieldFormatError(f"metadata is missing field {exc}") from None
    if grid.n_dof != n or contacts.n_contacts != k:
        raise LeadFieldFormatError(
            f"metadata describes a {grid.n_dof}x{contacts.n_contacts} field, header says {n}x{k}")
    return LeadField(L, grid, contacts, provenance, meta.get("extra", {}))


def export_leadfield_csv(field: LeadField, path) -> None:
    """Matrix only, one row per line, comma separated."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in field.matrix:
            w.writerow([_fmt(v) for v in row])


def import_leadfield_csv(path, grid: DofGrid, contacts: ContactArray) -> LeadField:
    """Read a CSV matrix and attach the given geometry; provenance becomes ``imported``."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for i, rec in enumerate(r for r in csv.reader(fh) if r):
            if len(rec) != contacts.n_contacts:
                raise LeadFieldFormatError(
                    f"expected K={contacts.n_contacts} columns but the row has {len(rec)}", i)
            rows.append([_parse_float(t.strip(), i, j) for j, t in enumerate(rec)])
    if len(rows) != grid.n_dof:
        raise LeadFieldFormatError(f"expected N={grid.n_dof} rows but the file has {len(rows)}")
    return LeadField(np.array(rows, dtype=float), grid, contacts, "imported",
                     {"source": str(path)})
