"""Network, generator and damage-scenario data model.

Units: power in MW, time in restoration steps (1-based).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping

DEFAULT_CRANK_FRACTION = 0.1


class GenKind(str, Enum):
    BS = "BS"
    NBS = "NBS"


@dataclass(frozen=True)
class Bus:
    id: str
    demand: float = 0.0


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: str
    to_bus: str
    f_min: float
    f_max: float
    # Only used by the optional angle-based network mode (p.u. on 100 MVA).
    reactance: float | None = None


@dataclass(frozen=True)
class Generator:
    id: str
    bus: str
    kind: GenKind
    p_min: float
    p_max: float
    crank_fraction: float = DEFAULT_CRANK_FRACTION

    def __post_init__(self) -> None:
        if not isinstance(self.kind, GenKind):
            object.__setattr__(self, "kind", GenKind(self.kind))

    @property
    def is_nbs(self) -> bool:
        return self.kind is GenKind.NBS


def cranking_power(g: Generator) -> float:
    """Power an NBS unit must absorb before it can be dispatched."""
    if g.kind is not GenKind.NBS:
        raise ValueError(f"generator {g.id!r} is black-start; cranking power is undefined")
    return g.crank_fraction * g.p_max


@dataclass(frozen=True)
class GridCase:
    name: str
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "lines", tuple(self.lines))
        object.__setattr__(self, "generators", tuple(self.generators))

    def bus(self, bus_id: str) -> Bus:
        return self._bus_index()[bus_id]

    def line(self, line_id: str) -> Line:
        for ln in self.lines:
            if ln.id == line_id:
                return ln
        raise KeyError(line_id)

    def _bus_index(self) -> dict[str, Bus]:
        return {b.id: b for b in self.buses}

    def generators_at(self, bus_id: str) -> list[Generator]:
        return [g for g in self.generators if g.bus == bus_id]

    def nbs_generators(self) -> list[Generator]:
        return [g for g in self.generators if g.is_nbs]

    def nbs_by_bus(self) -> dict[str, Generator]:
        """Map each NBS-hosting bus to its (single) NBS unit."""
        return {g.bus: g for g in self.generators if g.is_nbs}

    def incident_lines(self, bus_id: str) -> list[Line]:
        return [ln for ln in self.lines if bus_id in (ln.from_bus, ln.to_bus)]

    @property
    def total_demand(self) -> float:
        return sum(b.demand for b in self.buses)


@dataclass(frozen=True)
class DamageScenario:
    """Damaged lines, per-step repair budget and horizon.

    ``demand_profile`` maps ``(bus_id, step)`` to a demand overriding
    ``Bus.demand`` for that step; pairs not named keep the bus demand.
    """

    damaged_line_ids: frozenset[str]
    budget: int
    horizon: int
    demand_profile: Mapping[tuple[str, int], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "damaged_line_ids", frozenset(self.damaged_line_ids))
        object.__setattr__(self, "demand_profile", MappingProxyType(dict(self.demand_profile)))

    def demand(self, bus: Bus, step: int) -> float:
        return self.demand_profile.get((bus.id, step), bus.demand)

    @property
    def steps(self) -> range:
        return range(1, self.horizon + 1)


def default_horizon(n_damaged: int, budget: int) -> int:
    return math.ceil(n_damaged / budget) + 2


@dataclass(frozen=True)
class Violation:
    entity: str
    message: str

    def __str__(self) -> str:
        return f"{self.entity}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        # truthy when there is something to report
        return bool(self.violations)

    def __len__(self) -> int:
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def messages(self) -> list[str]:
        return [str(v) for v in self.violations]


def _duplicates(ids: Iterable[str]) -> list[str]:
    return sorted(k for k, n in Counter(ids).items() if n > 1)


def _is_finite_number(x: object) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def validate(case: GridCase, scenario: DamageScenario | None = None) -> ValidationReport:
    """Collect every invariant violation of ``case`` (and ``scenario``).

    Never raises; an empty report means the inputs can be formulated.
    """
    out: list[Violation] = []
    add = lambda entity, msg: out.append(Violation(entity, msg))  # noqa: E731

    for dup in _duplicates(b.id for b in case.buses):
        add(f"bus {dup}", "duplicate bus id")
    for dup in _duplicates(ln.id for ln in case.lines):
        add(f"line {dup}", "duplicate line id")
    for dup in _duplicates(g.id for g in case.generators):
        add(f"generator {dup}", "duplicate generator id")

    bus_ids = {b.id for b in case.buses}
    for b in case.buses:
        if not _is_finite_number(b.demand) or b.demand < 0:
            add(f"bus {b.id}", f"demand must be a finite nonnegative number, got {b.demand!r}")

    for ln in case.lines:
        ent = f"line {ln.id}"
        if ln.from_bus == ln.to_bus:
            add(ent, f"self-loop at bus {ln.from_bus}")
        for end in (ln.from_bus, ln.to_bus):
            if end not in bus_ids:
                add(ent, f"references unknown bus {end!r}")
        if not (_is_finite_number(ln.f_min) and _is_finite_number(ln.f_max)):
            add(ent, "flow limits must be finite numbers")
        elif not ln.f_min <= 0 <= ln.f_max:
            add(ent, f"flow limits must satisfy f_min <= 0 <= f_max, got [{ln.f_min}, {ln.f_max}]")
        if ln.reactance is not None and not (_is_finite_number(ln.reactance) and ln.reactance > 0):
            add(ent, "reactance must be positive when given")

    for g in case.generators:
        ent = f"generator {g.id}"
        if g.bus not in bus_ids:
            add(ent, f"references unknown bus {g.bus!r}")
        if not (_is_finite_number(g.p_min) and _is_finite_number(g.p_max)):
            add(ent, "dispatch bounds must be finite numbers")
            continue
        if not 0 <= g.p_min <= g.p_max:
            add(ent, f"dispatch bounds must satisfy 0 <= p_min <= p_max, got [{g.p_min}, {g.p_max}]")
        if g.is_nbs:
            if not (_is_finite_number(g.crank_fraction) and g.crank_fraction > 0):
                add(ent, "crank_fraction must be positive")
            elif g.p_max <= 0:
                add(ent, "cranking power must be positive")

    gens_per_bus = Counter(g.bus for g in case.generators)
    nbs_per_bus = Counter(g.bus for g in case.generators if g.is_nbs)
    for bus_id in sorted(nbs_per_bus):
        if nbs_per_bus[bus_id] > 1:
            add(f"bus {bus_id}", "hosts more than one NBS generator")
        elif gens_per_bus[bus_id] > 1:
            add(f"bus {bus_id}", "an NBS bus cannot host additional generators")

    if scenario is not None:
        line_ids = {ln.id for ln in case.lines}
        for lid in sorted(scenario.damaged_line_ids - line_ids):
            add(f"line {lid}", "damaged line is not part of the case")
        if not isinstance(scenario.budget, int) or scenario.budget < 1:
            add("scenario", f"budget must be an integer >= 1, got {scenario.budget!r}")
        if not isinstance(scenario.horizon, int) or scenario.horizon < 1:
            add("scenario", f"horizon must be an integer >= 1, got {scenario.horizon!r}")
        for (bus_id, step), value in sorted(scenario.demand_profile.items()):
            ent = f"demand_profile[{bus_id}, {step}]"
            if bus_id not in bus_ids:
                add(ent, "unknown bus")
            if not isinstance(step, int) or not 1 <= step <= max(scenario.horizon, 0):
                add(ent, "step outside the horizon")
            if not _is_finite_number(value) or value < 0:
                add(ent, f"demand must be a finite nonnegative number, got {value!r}")

    return ValidationReport(tuple(out))
