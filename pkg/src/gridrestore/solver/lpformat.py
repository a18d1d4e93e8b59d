"""Writer for the CPLEX-style LP text format.

Naming contract: a column is named ``str(column.key)`` (for restoration
models that is the ``VarRef`` rendering such as ``B_L7_t2``) and a row by
its ``name`` or ``r<index>`` when unnamed. Characters outside
``[A-Za-z0-9_.]`` become ``_``; a name starting with a digit or a period
gets an ``x_`` prefix; a repeated name gets ``~2``, ``~3``, ... appended
in column (row) order. Output depends only on the instance, so exporting
the same instance twice gives byte-identical files.
"""

from __future__ import annotations

import math
import os
import re
from typing import Hashable, Iterable, Sequence

from ..fsutil import atomic_write
from .instance import MilpInstance, Sense

_BAD = re.compile(r"[^A-Za-z0-9_.]")
_WRAP = 200


def _num(v: float) -> str:
    if math.isfinite(v) and float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _sanitize(raw: str) -> str:
    s = _BAD.sub("_", raw) or "_"
    if s[0].isdigit() or s[0] == ".":
        s = "x_" + s
    return s


def unique_names(raw: Iterable[Hashable]) -> list[str]:
    """Apply the naming contract to a sequence of keys."""
    out: list[str] = []
    taken: set[str] = set()
    for key in raw:
        base = _sanitize(str(key))
        name, k = base, 1
        while name in taken:
            k += 1
            name = f"{base}~{k}"
        taken.add(name)
        out.append(name)
    return out


def _terms(coefs: Sequence[tuple[int, float]], names: list[str]) -> list[str]:
    parts = []
    for i, (j, a) in enumerate(sorted(coefs)):
        sign = "-" if a < 0 else "+"
        mag = abs(a)
        body = names[j] if mag == 1 else f"{_num(mag)} {names[j]}"
        if i == 0:
            parts.append(f"- {body}" if sign == "-" else body)
        else:
            parts.append(f"{sign} {body}")
    return parts


def _wrapped(head: str, parts: list[str], tail: str = "") -> list[str]:
    lines, cur = [], head
    for p in parts:
        if len(cur) + len(p) + 1 > _WRAP and cur.strip():
            lines.append(cur)
            cur = "  "
        cur += " " + p
    if tail:
        cur += " " + tail
    lines.append(cur)
    return lines


def lp_text(instance: MilpInstance) -> str:
    cols = unique_names(c.key for c in instance.columns)
    rows = unique_names(r.name or f"r{i}" for i, r in enumerate(instance.rows))
    out = [f"\\ {instance.name}", "Minimize"]
    obj = [(j, a) for j, a in instance.objective if a != 0]
    parts = _terms(obj, cols) if obj else ([f"0 {cols[0]}"] if cols else [])
    if instance.obj_offset:
        parts.append(f"{'-' if instance.obj_offset < 0 else '+'} {_num(abs(instance.obj_offset))}")
    out += _wrapped(" obj:", parts)
    out.append("Subject To")
    for name, r in zip(rows, instance.rows):
        parts = _terms(r.coefs, cols) or [f"0 {cols[0]}"]
        op = {Sense.LE: "<=", Sense.GE: ">=", Sense.EQ: "="}[r.sense]
        out += _wrapped(f" {name}:", parts, f"{op} {_num(r.rhs)}")
    out.append("Bounds")
    for name, c in zip(cols, instance.columns):
        lo, hi = c.lb, c.ub
        if lo == hi:
            out.append(f" {name} = {_num(lo)}")
        elif math.isinf(lo) and math.isinf(hi):
            out.append(f" {name} free")
        else:
            los = "-inf" if math.isinf(lo) else _num(lo)
            his = "+inf" if math.isinf(hi) else _num(hi)
            out.append(f" {los} <= {name} <= {his}")
    bins = [cols[j] for j, c in enumerate(instance.columns) if c.binary]
    if bins:
        out.append("Binaries")
        out += [f" {b}" for b in bins]
    out.append("End")
    return "\n".join(out) + "\n"


def export_lp(instance: MilpInstance, path: str | os.PathLike) -> None:
    """Write ``instance`` as an LP file (write-then-rename)."""
    atomic_write(path, lp_text(instance))
