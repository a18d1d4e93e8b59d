"""Solver-facing MILP container.

Columns are addressed by index; each carries an arbitrary hashable ``key``
(the restoration model uses :class:`gridrestore.model.VarRef`) that is kept
for decoding and LP-file naming.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Hashable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp


class Sense(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


@dataclass(frozen=True)
class Column:
    key: Hashable
    lb: float
    ub: float
    binary: bool = False


@dataclass(frozen=True)
class Row:
    coefs: tuple[tuple[int, float], ...]
    sense: Sense
    rhs: float
    name: str = ""

    def activity(self, x: Sequence[float]) -> float:
        return math.fsum(a * x[j] for j, a in self.coefs)

    def residual(self, x: Sequence[float]) -> float:
        """Amount by which ``x`` violates the row (0 when satisfied)."""
        lhs = self.activity(x)
        if self.sense is Sense.LE:
            return max(0.0, lhs - self.rhs)
        if self.sense is Sense.GE:
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass(frozen=True)
class MilpInstance:
    """Minimize ``objective . x`` subject to ``rows`` and column bounds."""

    columns: tuple[Column, ...]
    rows: tuple[Row, ...]
    objective: tuple[tuple[int, float], ...]
    obj_offset: float = 0.0
    name: str = "milp"

    def __post_init__(self) -> None:
        n = len(self.columns)
        for c in self.columns:
            if c.binary and (c.lb < 0 or c.ub > 1):
                raise ValueError(f"binary column {c.key!r} must have bounds within [0, 1]")
            if c.lb > c.ub:
                raise ValueError(f"column {c.key!r} has lb > ub")
        for r in self.rows:
            for j, _ in r.coefs:
                if not 0 <= j < n:
                    raise ValueError(f"row {r.name!r} references missing column {j}")
        for j, _ in self.objective:
            if not 0 <= j < n:
                raise ValueError(f"objective references missing column {j}")

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @cached_property
    def index(self) -> dict[Hashable, int]:
        return {c.key: j for j, c in enumerate(self.columns)}

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        data, ri, ci = [], [], []
        for i, r in enumerate(self.rows):
            for j, a in r.coefs:
                ri.append(i)
                ci.append(j)
                data.append(a)
        return sp.csr_matrix((data, (ri, ci)), shape=(self.n_rows, self.n_cols), dtype=float)

    @cached_property
    def cost(self) -> np.ndarray:
        c = np.zeros(self.n_cols)
        for j, a in self.objective:
            c[j] += a
        return c

    @cached_property
    def lb(self) -> np.ndarray:
        return np.array([c.lb for c in self.columns], dtype=float)

    @cached_property
    def ub(self) -> np.ndarray:
        return np.array([c.ub for c in self.columns], dtype=float)

    @cached_property
    def rhs(self) -> np.ndarray:
        return np.array([r.rhs for r in self.rows], dtype=float)

    @cached_property
    def senses(self) -> tuple[Sense, ...]:
        return tuple(r.sense for r in self.rows)

    @cached_property
    def binaries(self) -> np.ndarray:
        return np.array([j for j, c in enumerate(self.columns) if c.binary], dtype=int)

    def evaluate(self, x: Sequence[float]) -> float:
        return self.obj_offset + math.fsum(a * x[j] for j, a in self.objective)

    def max_violation(self, x: Sequence[float]) -> float:
        """Largest bound or row violation of ``x``."""
        worst = 0.0
        for j, c in enumerate(self.columns):
            worst = max(worst, c.lb - x[j], x[j] - c.ub)
        for r in self.rows:
            worst = max(worst, r.residual(x))
        return worst

    def relaxed(self) -> "MilpInstance":
        cols = tuple(Column(c.key, c.lb, c.ub, False) for c in self.columns)
        return MilpInstance(cols, self.rows, self.objective, self.obj_offset, self.name)

    def with_rows(self, rows: Iterable[Row]) -> "MilpInstance":
        return MilpInstance(self.columns, self.rows + tuple(rows), self.objective, self.obj_offset, self.name)

    def with_bounds(self, bounds: dict[int, tuple[float, float]]) -> "MilpInstance":
        cols = list(self.columns)
        for j, (lo, hi) in bounds.items():
            c = cols[j]
            cols[j] = Column(c.key, lo, hi, c.binary)
        return MilpInstance(tuple(cols), self.rows, self.objective, self.obj_offset, self.name)


@dataclass
class InstanceBuilder:
    """Incremental construction of a :class:`MilpInstance`."""

    name: str = "milp"
    _columns: list[Column] = field(default_factory=list)
    _rows: list[Row] = field(default_factory=list)
    _objective: dict[int, float] = field(default_factory=dict)
    _index: dict[Hashable, int] = field(default_factory=dict)

    def add_column(self, key: Hashable, lb: float, ub: float, *, binary: bool = False, cost: float = 0.0) -> int:
        if key in self._index:
            raise ValueError(f"duplicate column key {key!r}")
        j = len(self._columns)
        self._columns.append(Column(key, float(lb), float(ub), binary))
        self._index[key] = j
        if cost:
            self._objective[j] = float(cost)
        return j

    def col(self, key: Hashable) -> int:
        return self._index[key]

    def add_row(self, coefs: Iterable[tuple[int, float]], sense: Sense | str, rhs: float, name: str = "") -> int:
        merged: dict[int, float] = {}
        for j, a in coefs:
            merged[j] = merged.get(j, 0.0) + float(a)
        terms = tuple((j, a) for j, a in merged.items() if a != 0.0)
        self._rows.append(Row(terms, Sense(sense), float(rhs), name))
        return len(self._rows) - 1

    def build(self) -> MilpInstance:
        obj = tuple(sorted(self._objective.items()))
        return MilpInstance(tuple(self._columns), tuple(self._rows), obj, 0.0, self.name)
