"""Brute-force verifier for small restoration instances.

The oracle enumerates every schedule atom (a repair step per damaged line
and an energization step per NBS unit), solves the dispatch LP that the atom
leaves, and keeps the minimum. The dispatch LP is written here from the grid
data alone, not taken from :func:`gridrestore.model.build`, so agreement
between the two is a real cross-check of the MILP encoding.

Per atom and step t, with e the energization step of an NBS unit:

* lines in service: undamaged ones, and damaged ones repaired at a step <= t;
  out-of-service lines carry no flow
* NBS output is ``-P_crank`` through step e and within [p_min, p_max] after
* net inflow at the NBS bus is <= 0 before e, equals ``P_crank`` at e and is
  <= ``P_crank`` after e (this is ``mu = max(0, beta_1..beta_t)`` with mu
  fixed by the atom)
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterator, Mapping

import numpy as np

from .grid import Bus, DamageScenario, Generator, GenKind, GridCase, Line, cranking_power, validate
from .solver.instance import InstanceBuilder, Sense
from .solver.result import Status
from .solver.simplex import LPEngine

CONSISTENCY_TOL = 1e-6


class SizeGuardError(ValueError):
    """The instance is too large to enumerate."""


@dataclass(frozen=True)
class SizeGuard:
    max_damaged: int = 6
    max_steps: int = 4
    max_nbs: int = 2

    def check(self, case: GridCase, scenario: DamageScenario) -> None:
        problems = []
        if len(scenario.damaged_line_ids) > self.max_damaged:
            problems.append(f"{len(scenario.damaged_line_ids)} damaged lines > {self.max_damaged}")
        if scenario.horizon > self.max_steps:
            problems.append(f"horizon {scenario.horizon} > {self.max_steps}")
        if len(case.nbs_generators()) > self.max_nbs:
            problems.append(f"{len(case.nbs_generators())} NBS units > {self.max_nbs}")
        if problems:
            raise SizeGuardError("instance exceeds the oracle size guard: " + "; ".join(problems))


@dataclass(frozen=True)
class ScheduleAtom:
    """Repair step per damaged line and energization step per NBS bus (None = never)."""

    repair_step: Mapping[str, int | None]
    energization_step: Mapping[str, int | None]

    def repaired_at(self, t: int) -> list[str]:
        return sorted(a for a, s in self.repair_step.items() if s == t)

    def describe(self) -> str:
        rep = ", ".join(f"{a}@{s}" for a, s in sorted(self.repair_step.items()) if s is not None) or "none"
        en = ", ".join(f"{b}@{s}" for b, s in sorted(self.energization_step.items())) or "none"
        return f"repairs [{rep}] energization [{en}]"


class _AtomLP:
    """One LP over all steps; an atom only changes column bounds."""

    def __init__(self, case: GridCase, scenario: DamageScenario):
        self.case, self.scenario = case, scenario
        self.nbs = case.nbs_by_bus()
        self.crank = {b: cranking_power(g) for b, g in self.nbs.items()}
        mb = InstanceBuilder(name=f"oracle_{case.name}")
        self.flow: dict[tuple[str, int], int] = {}
        self.gen: dict[tuple[str, int], int] = {}
        self.inflow: dict[tuple[str, int], int] = {}
        ls: dict[tuple[str, int], int] = {}
        for t in scenario.steps:
            for bus in case.buses:
                cap = scenario.demand(bus, t) + self.crank.get(bus.id, 0.0)
                ls[bus.id, t] = mb.add_column(("LS", bus.id, t), 0.0, cap, cost=1.0)
            for g in case.generators:
                self.gen[g.id, t] = mb.add_column(("P", g.id, t), g.p_min, g.p_max)
            for ln in case.lines:
                self.flow[ln.id, t] = mb.add_column(("f", ln.id, t), ln.f_min, ln.f_max)
            for b in self.nbs:
                self.inflow[b, t] = mb.add_column(("in", b, t), -math.inf, math.inf)
        for t in scenario.steps:
            for bus in case.buses:
                net = self._net(bus.id, t)
                terms = [(ls[bus.id, t], 1.0)] + [(self.gen[g.id, t], 1.0) for g in case.generators_at(bus.id)]
                mb.add_row(terms + net, Sense.EQ, scenario.demand(bus, t))
                if bus.id in self.nbs:
                    mb.add_row([(self.inflow[bus.id, t], 1.0)] + [(j, -a) for j, a in net], Sense.EQ, 0.0)
        self.instance = mb.build()
        self.engine = LPEngine(self.instance)
        self.basis = None

    def _net(self, bus_id: str, t: int) -> list[tuple[int, float]]:
        terms = []
        for ln in self.case.lines:
            if ln.to_bus == bus_id:
                terms.append((self.flow[ln.id, t], 1.0))
            if ln.from_bus == bus_id:
                terms.append((self.flow[ln.id, t], -1.0))
        return terms

    def solve(self, atom: ScheduleAtom) -> float | None:
        lb, ub = self.instance.lb.copy(), self.instance.ub.copy()
        for a, r in atom.repair_step.items():
            for t in self.scenario.steps:
                if r is None or t < r:
                    lb[self.flow[a, t]] = ub[self.flow[a, t]] = 0.0
        for b, g in self.nbs.items():
            e = atom.energization_step[b]
            pc = self.crank[b]
            for t in self.scenario.steps:
                j, k = self.gen[g.id, t], self.inflow[b, t]
                if e is None or t <= e:
                    lb[j] = ub[j] = -pc
                if e is None or t < e:
                    ub[k] = 0.0
                elif t == e:
                    lb[k] = ub[k] = pc
                else:
                    ub[k] = pc
        sol, basis = self.engine.solve(lb, ub, start=self.basis)
        if sol.status is Status.INFEASIBLE:
            return None
        if sol.status is not Status.OPTIMAL:
            raise RuntimeError(f"oracle LP failed with status {sol.status.value}")
        self.basis = basis
        if not self._consistent(atom, sol.values):
            return None
        return sol.objective

    def _consistent(self, atom: ScheduleAtom, x: np.ndarray) -> bool:
        """Re-derive mu from the LP flows and compare with the atom."""
        for b in self.nbs:
            e = atom.energization_step[b]
            pc = self.crank[b]
            running = 0.0
            for t in self.scenario.steps:
                inflow = sum(a * x[j] for j, a in self._net(b, t))
                running = max(running, inflow / pc)
                mu = 1.0 if e is not None and t >= e else 0.0
                if abs(running - mu) > CONSISTENCY_TOL:
                    return False
        return True


def atoms(case: GridCase, scenario: DamageScenario) -> Iterator[ScheduleAtom]:
    """Every admissible atom, in a fixed order."""
    damaged = sorted(scenario.damaged_line_ids)
    nbs = sorted(case.nbs_by_bus())
    choices = (None, *scenario.steps)
    for reps in itertools.product(choices, repeat=len(damaged)):
        load = [0] * (scenario.horizon + 1)
        for r in reps:
            if r is not None:
                load[r] += 1
        if max(load, default=0) > scenario.budget:
            continue
        repair = MappingProxyType(dict(zip(damaged, reps)))
        for ens in itertools.product(choices, repeat=len(nbs)):
            yield ScheduleAtom(repair, MappingProxyType(dict(zip(nbs, ens))))


def enumerate_optimal(
    case: GridCase, scenario: DamageScenario, size_guard: SizeGuard | None = None
) -> tuple[float, ScheduleAtom]:
    """Exact optimum by enumeration; ties go to the first atom in :func:`atoms` order."""
    (size_guard or SizeGuard()).check(case, scenario)
    report = validate(case, scenario)
    if not report.ok:
        raise ValueError("inputs failed validation:\n  " + "\n  ".join(report.messages()))
    lp = _AtomLP(case, scenario)
    best, best_atom = math.inf, None
    for atom in atoms(case, scenario):
        obj = lp.solve(atom)
        if obj is not None and obj < best - 1e-9 * (1 + abs(best if math.isfinite(best) else 0)):
            best, best_atom = obj, atom
    if best_atom is None:
        raise RuntimeError("no admissible atom is feasible")
    return best, best_atom


@dataclass(frozen=True)
class CertResult:
    certified: bool
    milp_objective: float
    oracle_objective: float
    milp_schedule: ScheduleAtom | None
    oracle_schedule: ScheduleAtom
    milp_status: str
    detail: str = ""

    def report(self) -> str:
        head = "CERTIFIED" if self.certified else "MISMATCH"
        lines = [
            f"{head}: milp objective {self.milp_objective:.10g}, oracle objective {self.oracle_objective:.10g}",
        ]
        if not self.certified:
            lines.append(f"  milp status: {self.milp_status}")
            lines.append(f"  milp schedule:   {self.milp_schedule.describe() if self.milp_schedule else 'none'}")
            lines.append(f"  oracle schedule: {self.oracle_schedule.describe()}")
        if self.detail:
            lines.append(f"  {self.detail}")
        return "\n".join(lines)


def schedule_of(plan) -> ScheduleAtom:
    """The atom realized by a decoded :class:`~gridrestore.model.RestorationPlan`."""
    return ScheduleAtom(MappingProxyType(dict(plan.repair_step)), MappingProxyType(dict(plan.energization_step)))


def cross_check(case: GridCase, scenario: DamageScenario, size_guard: SizeGuard | None = None) -> CertResult:
    from .restore import solve

    oracle_obj, oracle_atom = enumerate_optimal(case, scenario, size_guard)
    result = solve(case, scenario)
    sol = result.solution
    if not sol.ok:
        return CertResult(False, math.nan, oracle_obj, None, oracle_atom, sol.status.value,
                          "MILP returned no solution")
    tol = 1e-6 * (1 + abs(oracle_obj))
    ok = sol.status is Status.OPTIMAL and abs(sol.objective - oracle_obj) <= tol
    return CertResult(ok, sol.objective, oracle_obj, schedule_of(result.plan), oracle_atom, sol.status.value,
                      f"tolerance {tol:.3g}")


# -- fixtures -----------------------------------------------------------------


def chain3(budget: int, horizon: int = 3) -> tuple[GridCase, DamageScenario]:
    """BS (40 MW) - L1 - load bus (20 MW) - L2 - NBS (p_max 100, crank 10); both lines damaged."""
    case = GridCase(
        name=f"chain3_b{budget}",
        buses=(Bus("1", 0.0), Bus("2", 20.0), Bus("3", 0.0)),
        lines=(Line("L1", "1", "2", -100.0, 100.0), Line("L2", "2", "3", -100.0, 100.0)),
        generators=(
            Generator("G1", "1", GenKind.BS, 0.0, 40.0),
            Generator("G3", "3", GenKind.NBS, 0.0, 100.0),
        ),
    )
    return case, DamageScenario(frozenset({"L1", "L2"}), budget, horizon)


def random_instance(seed: int, *, max_buses: int = 5) -> tuple[GridCase, DamageScenario]:
    """Small connected instance inside the default size guard, reproducible from ``seed``."""
    rng = random.Random(seed)
    n = rng.randint(4, max_buses)
    ids = [str(i + 1) for i in range(n)]
    edges = [(ids[rng.randrange(i)], ids[i]) for i in range(1, n)]  # random spanning tree
    extra = [(a, b) for a, b in itertools.combinations(ids, 2) if (a, b) not in edges and (b, a) not in edges]
    rng.shuffle(extra)
    edges += extra[: rng.randint(0, min(2, len(extra)))]
    lines = []
    for k, (a, b) in enumerate(edges):
        cap = float(rng.choice((30, 50, 80, 120)))
        lines.append(Line(f"L{k + 1}", a, b, -cap, cap))

    order = ids[:]
    rng.shuffle(order)
    n_nbs = rng.randint(1, min(2, n - 2))
    bs_bus, nbs_buses = order[0], order[1 : 1 + n_nbs]
    gens = [Generator("G" + bs_bus, bs_bus, GenKind.BS, 0.0, float(rng.choice((40, 60, 90, 150))))]
    gens += [Generator("G" + b, b, GenKind.NBS, 0.0, float(rng.choice((50, 100, 200)))) for b in nbs_buses]
    gen_buses = {g.bus for g in gens}
    buses = tuple(
        Bus(b, 0.0 if b in gen_buses else float(rng.choice((0, 10, 20, 35, 60)))) for b in ids
    )
    case = GridCase(f"rand{seed}", buses, tuple(lines), tuple(sorted(gens, key=lambda g: g.id)))

    n_dmg = rng.randint(2, min(4, len(lines)))
    damaged = frozenset(ln.id for ln in rng.sample(lines, n_dmg))
    budget = rng.randint(1, 2)
    horizon = 3
    return case, DamageScenario(damaged, budget, horizon)


# Seeds of the committed randomized suite.
SUITE_SEEDS = tuple(range(101, 113))
