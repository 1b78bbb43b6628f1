"""Debug dump of a :class:`LinearProgram` in CPLEX LP text format.

Layout::

    \\ <name>
    Minimize
     obj: 1.5 x0 + 2 x1
    Subject To
     u0: x0 - x1 <= 3
     e0: x0 + x1 = 0
    Bounds
     0 <= x0 <= 2
     x1 free
    End

Variables are named ``x<index>`` and rows ``u<index>`` (inequalities) and
``e<index>`` (equalities). Coefficients use ``repr`` so the text reproduces
the data exactly. Variables whose ``variable_map`` group is known get a
trailing comment listing the group ranges.
"""

from __future__ import annotations

import io
import math
from pathlib import Path

import numpy as np

from .program import LinearProgram


def _num(v: float) -> str:
    v = float(v)
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _expr(cols, vals) -> str:
    parts = []
    for j, v in zip(cols, vals):
        if v == 0.0:
            continue
        sign = "-" if v < 0 else "+"
        mag = abs(float(v))
        term = f"x{j}" if mag == 1.0 else f"{_num(mag)} x{j}"
        parts.append((sign, term))
    if not parts:
        return "0 x0"
    first_sign, first = parts[0]
    out = ("- " if first_sign == "-" else "") + first
    for sign, term in parts[1:]:
        out += f" {sign} {term}"
    return out


def _rows(A, b, prefix: str, sense: str):
    A = A.tocsr()
    for i in range(A.shape[0]):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        yield f" {prefix}{i}: {_expr(A.indices[lo:hi], A.data[lo:hi])} {sense} {_num(b[i])}"


def _bound(j: int, lo: float, hi: float) -> str | None:
    if lo == 0.0 and hi == math.inf:
        return None
    if lo == -math.inf and hi == math.inf:
        return f" x{j} free"
    if lo == hi:
        return f" x{j} = {_num(lo)}"
    left = "-inf" if lo == -math.inf else _num(lo)
    right = "+inf" if hi == math.inf else _num(hi)
    return f" {left} <= x{j} <= {right}"


def format_lp(lp: LinearProgram) -> str:
    """Return the LP as CPLEX LP text."""
    out = io.StringIO()
    out.write(f"\\ {lp.name}\n")
    for name, s in lp.variable_map.items():
        idx = np.arange(lp.n_variables)[s]
        if idx.size:
            out.write(f"\\ {name}: x{idx[0]}..x{idx[-1]}\n")
    out.write("Minimize\n")
    nz = np.flatnonzero(lp.c)
    out.write(f" obj: {_expr(nz, lp.c[nz])}\n")
    out.write("Subject To\n")
    for line in _rows(lp.A_ub, lp.b_ub, "u", "<="):
        out.write(line + "\n")
    for line in _rows(lp.A_eq, lp.b_eq, "e", "="):
        out.write(line + "\n")
    out.write("Bounds\n")
    for j in range(lp.n_variables):
        line = _bound(j, float(lp.lb[j]), float(lp.ub[j]))
        if line is not None:
            out.write(line + "\n")
    out.write("End\n")
    return out.getvalue()


def write_lp(lp: LinearProgram, path) -> None:
    """Write :func:`format_lp` output to ``path``."""
    path = Path(path)
    try:
        path.write_text(format_lp(lp), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write LP dump to {path}: {exc}") from exc
