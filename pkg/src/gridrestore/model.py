"""Restoration MILP: line repair sequencing coupled with NBS energization.

Column layout, per step t = 1..T:

    LS[b,t]      unserved load at bus b
    P[g,t]       generator dispatch (NBS units sit at -P_crank until started)
    f[a,t]       line flow
    S[a,t]       line in-service status (fixed to 1 for undamaged lines)
    B[a,t]       repair decision, damaged lines only (binary)
    beta[b,t]    net inflow at an NBS bus in units of its cranking power
    mu[b,t]      NBS energized status (binary)
    eps[b,t,i]   selector of the maximizing candidate in mu = max(0, beta_1..beta_t);
                 i = 0 is the constant-zero candidate (binary)

An NBS unit that receives its full cranking power at step t (beta = 1) has
``mu = 1`` from step t on and is dispatchable from step t + 1. During the
cranking step it still consumes ``P_crank``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Mapping

from .grid import DamageScenario, GridCase, cranking_power, validate
from .solver.instance import InstanceBuilder, MilpInstance, Sense
from .solver.result import INT_TOL, Solution

BASE_MVA = 100.0
ANGLE_LIMIT = math.pi / 2


class VarKind(str, Enum):
    LS = "LS"
    FLOW = "f"
    GEN = "P"
    LINE_B = "B"
    LINE_S = "S"
    BETA = "beta"
    MU = "mu"
    EPS = "eps"
    THETA = "theta"


@dataclass(frozen=True, order=True)
class VarRef:
    kind: VarKind
    entity: str
    step: int
    aux_step: int | None = None

    def __str__(self) -> str:
        s = f"{self.kind.value}_{self.entity}_t{self.step}"
        if self.aux_step is not None:
            s += f"_i{self.aux_step}"
        return s


def big_m(case: GridCase, bus_id: str) -> float:
    """Big-M for the max-linearization rows of one NBS bus.

    ``|beta|`` can never exceed the incident line capacity divided by the
    cranking power, so ``1 + that ratio`` bounds ``mu - beta``.
    """
    g = case.nbs_by_bus()[bus_id]
    cap = sum(ln.f_max + abs(ln.f_min) for ln in case.incident_lines(bus_id))
    return 1.0 + cap / cranking_power(g)


def _net_inflow(case: GridCase, bus_id: str, t: int, col) -> list[tuple[int, float]]:
    terms = []
    for ln in case.lines:
        if ln.to_bus == bus_id:
            terms.append((col(VarRef(VarKind.FLOW, ln.id, t)), 1.0))
        elif ln.from_bus == bus_id:
            terms.append((col(VarRef(VarKind.FLOW, ln.id, t)), -1.0))
    return terms


def build(case: GridCase, scenario: DamageScenario, *, angle_mode: bool = False, strengthen: bool = False) -> MilpInstance:
    """Formulate the restoration MILP for ``case`` under ``scenario``."""
    report = validate(case, scenario)
    if not report.ok:
        raise ValueError("inputs failed validation:\n  " + "\n  ".join(report.messages()))
    if angle_mode:
        missing = [ln.id for ln in case.lines if ln.reactance is None]
        if missing:
            raise ValueError(f"angle mode needs a reactance on every line; missing: {', '.join(missing)}")

    T = scenario.horizon
    damaged = [ln for ln in case.lines if ln.id in scenario.damaged_line_ids]
    nbs = case.nbs_by_bus()
    crank = {b: cranking_power(g) for b, g in nbs.items()}
    bigm = {b: big_m(case, b) for b in nbs}

    mb = InstanceBuilder(name=case.name)
    add, col, row = mb.add_column, mb.col, mb.add_row

    for t in scenario.steps:
        for bus in case.buses:
            cap = scenario.demand(bus, t) + crank.get(bus.id, 0.0)
            add(VarRef(VarKind.LS, bus.id, t), 0.0, cap, cost=1.0)
        for g in case.generators:
            if g.is_nbs:
                add(VarRef(VarKind.GEN, g.id, t), -crank[g.bus], g.p_max)
            else:
                add(VarRef(VarKind.GEN, g.id, t), g.p_min, g.p_max)
        for ln in case.lines:
            add(VarRef(VarKind.FLOW, ln.id, t), ln.f_min, ln.f_max)
        for ln in case.lines:
            if ln.id in scenario.damaged_line_ids:
                add(VarRef(VarKind.LINE_S, ln.id, t), 0.0, 1.0)
            else:
                add(VarRef(VarKind.LINE_S, ln.id, t), 1.0, 1.0)
        for ln in damaged:
            add(VarRef(VarKind.LINE_B, ln.id, t), 0.0, 1.0, binary=True)
        for b in nbs:
            k = bigm[b] - 1.0
            add(VarRef(VarKind.BETA, b, t), -k, k)
            add(VarRef(VarKind.MU, b, t), 0.0, 1.0, binary=True)
            for i in range(t + 1):
                add(VarRef(VarKind.EPS, b, t, i), 0.0, 1.0, binary=True)
        if angle_mode:
            for bus in case.buses:
                add(VarRef(VarKind.THETA, bus.id, t), -ANGLE_LIMIT, ANGLE_LIMIT)

    for t in scenario.steps:
        # power balance at every bus
        for bus in case.buses:
            terms = [(col(VarRef(VarKind.LS, bus.id, t)), 1.0)]
            terms += [(col(VarRef(VarKind.GEN, g.id, t)), 1.0) for g in case.generators_at(bus.id)]
            terms += _net_inflow(case, bus.id, t, col)
            row(terms, Sense.EQ, scenario.demand(bus, t), f"balance_{bus.id}_t{t}")

        # cumulative status and flow gating of damaged lines
        for ln in damaged:
            s = col(VarRef(VarKind.LINE_S, ln.id, t))
            f = col(VarRef(VarKind.FLOW, ln.id, t))
            terms = [(s, 1.0)] + [(col(VarRef(VarKind.LINE_B, ln.id, tp)), -1.0) for tp in range(1, t + 1)]
            row(terms, Sense.EQ, 0.0, f"status_{ln.id}_t{t}")
            row([(f, 1.0), (s, -ln.f_max)], Sense.LE, 0.0, f"flowmax_{ln.id}_t{t}")
            row([(f, 1.0), (s, -ln.f_min)], Sense.GE, 0.0, f"flowmin_{ln.id}_t{t}")
        if damaged:
            row([(col(VarRef(VarKind.LINE_B, ln.id, t)), 1.0) for ln in damaged], Sense.LE,
                scenario.budget, f"budget_t{t}")

        for b, g in nbs.items():
            beta = col(VarRef(VarKind.BETA, b, t))
            mu = col(VarRef(VarKind.MU, b, t))
            M = bigm[b]
            inflow = _net_inflow(case, b, t, col)
            row([(beta, crank[b])] + [(j, -a) for j, a in inflow], Sense.EQ, 0.0, f"crank_{b}_t{t}")
            # mu = max(0, beta_1..beta_t)
            eps0 = col(VarRef(VarKind.EPS, b, t, 0))
            row([(mu, 1.0), (eps0, M)], Sense.LE, M, f"maxub_{b}_t{t}_i0")
            for i in range(1, t + 1):
                beta_i = col(VarRef(VarKind.BETA, b, i))
                eps_i = col(VarRef(VarKind.EPS, b, t, i))
                row([(mu, 1.0), (beta_i, -1.0)], Sense.GE, 0.0, f"maxlb_{b}_t{t}_i{i}")
                row([(mu, 1.0), (beta_i, -1.0), (eps_i, M)], Sense.LE, M, f"maxub_{b}_t{t}_i{i}")
            row([(col(VarRef(VarKind.EPS, b, t, i)), 1.0) for i in range(t + 1)], Sense.EQ, 1.0,
                f"select_{b}_t{t}")
            if strengthen:
                row([(mu, 1.0), (eps0, 1.0)], Sense.LE, 1.0, f"cutzero_{b}_t{t}")
                if t > 1:
                    row([(mu, 1.0), (col(VarRef(VarKind.MU, b, t - 1)), -1.0)], Sense.GE, 0.0, f"cutmono_{b}_t{t}")
                row([(mu, 1.0)] + [(col(VarRef(VarKind.LINE_S, ln.id, t)), -1.0) for ln in case.incident_lines(b)],
                    Sense.LE, 0.0, f"cutconn_{b}_t{t}")
            # generation follows the status reached by the end of the previous step
            p = col(VarRef(VarKind.GEN, g.id, t))
            if t == 1:
                row([(p, 1.0)], Sense.EQ, -crank[b], f"genlo_{g.id}_t{t}")
            else:
                mu_prev = col(VarRef(VarKind.MU, b, t - 1))
                row([(p, 1.0), (mu_prev, -(g.p_min + crank[b]))], Sense.GE, -crank[b], f"genlo_{g.id}_t{t}")
                row([(p, 1.0), (mu_prev, -(g.p_max + crank[b]))], Sense.LE, -crank[b], f"genhi_{g.id}_t{t}")

        if angle_mode:
            for ln in case.lines:
                k = BASE_MVA / ln.reactance
                f = col(VarRef(VarKind.FLOW, ln.id, t))
                ti = col(VarRef(VarKind.THETA, ln.from_bus, t))
                tj = col(VarRef(VarKind.THETA, ln.to_bus, t))
                terms = [(f, 1.0), (ti, -k), (tj, k)]
                if ln.id in scenario.damaged_line_ids:
                    s = col(VarRef(VarKind.LINE_S, ln.id, t))
                    M = 2 * ANGLE_LIMIT * k
                    row(terms + [(s, M)], Sense.LE, M, f"angleub_{ln.id}_t{t}")
                    row(terms + [(s, -M)], Sense.GE, -M, f"anglelb_{ln.id}_t{t}")
                else:
                    row(terms, Sense.EQ, 0.0, f"angle_{ln.id}_t{t}")

    return mb.build()


def expected_counts(n_bus: int, n_line: int, n_damaged: int, n_gen: int, n_nbs: int, T: int) -> dict[str, int]:
    """Column and row counts of :func:`build` (transport mode)."""
    tri = T * (T + 1) // 2
    cols = {
        "LS": n_bus * T,
        "P": n_gen * T,
        "f": n_line * T,
        "S": n_line * T,
        "B": n_damaged * T,
        "beta": n_nbs * T,
        "mu": n_nbs * T,
        "eps": n_nbs * (tri + T),
    }
    rows = (
        n_bus * T
        + 3 * n_damaged * T
        + (T if n_damaged else 0)
        + n_nbs * (T + tri + (tri + T) + T)
        + n_nbs * (1 + 2 * (T - 1))
    )
    return {**cols, "columns": sum(cols.values()), "rows": rows,
            "binary": cols["B"] + cols["mu"] + cols["eps"]}


# -- decoding ---------------------------------------------------------------


@dataclass(frozen=True)
class StepPlan:
    step: int
    repaired: tuple[str, ...]
    energized: tuple[str, ...]
    dispatch: Mapping[str, float]
    flows: Mapping[str, float]
    unserved: Mapping[str, float]
    demand: Mapping[str, float]
    line_status: Mapping[str, float]
    nbs_status: Mapping[str, int]
    beta: Mapping[str, float]
    eps_choice: Mapping[str, int]

    @property
    def total_unserved(self) -> float:
        return math.fsum(self.unserved.values())

    @property
    def total_demand(self) -> float:
        return math.fsum(self.demand.values())


@dataclass(frozen=True)
class RestorationPlan:
    case_name: str
    horizon: int
    budget: int
    status: str
    objective: float
    gap: float
    steps: tuple[StepPlan, ...]
    repair_step: Mapping[str, int | None] = field(default_factory=dict)
    energization_step: Mapping[str, int | None] = field(default_factory=dict)

    def trajectory(self) -> list[tuple[int, float, int, int]]:
        """(step, total unserved, lines repaired this step, NBS energized so far)."""
        out = []
        for sp_ in self.steps:
            energized = sum(1 for v in sp_.nbs_status.values() if v)
            out.append((sp_.step, sp_.total_unserved, len(sp_.repaired), energized))
        return out


def _as_binary(v: float, what: VarRef) -> int:
    r = round(v)
    if abs(v - r) > INT_TOL or r not in (0, 1):
        raise ValueError(f"{what} = {v!r} is not integral within {INT_TOL}")
    return int(r)


def decode(instance: MilpInstance, solution: Solution, case: GridCase, scenario: DamageScenario) -> RestorationPlan:
    """Turn a MILP solution into a per-step restoration schedule."""
    if not solution.ok:
        raise ValueError(f"cannot decode a solution with status {solution.status.value}")
    x = solution.values
    if len(x) != instance.n_cols:
        raise ValueError(f"solution has {len(x)} values but the instance has {instance.n_cols} columns")
    idx = instance.index

    def val(ref: VarRef) -> float:
        try:
            return float(x[idx[ref]])
        except KeyError:
            raise ValueError(f"instance has no column {ref}; it was not built from this case/scenario") from None

    nbs = case.nbs_by_bus()
    steps = []
    repair_step: dict[str, int | None] = {ln: None for ln in sorted(scenario.damaged_line_ids)}
    energization_step: dict[str, int | None] = {b: None for b in nbs}
    prev_mu = {b: 0 for b in nbs}
    for t in scenario.steps:
        repaired = []
        for ln in case.lines:
            if ln.id in scenario.damaged_line_ids:
                ref = VarRef(VarKind.LINE_B, ln.id, t)
                if _as_binary(val(ref), ref):
                    repaired.append(ln.id)
                    repair_step[ln.id] = t
        mu = {}
        eps_choice = {}
        energized = []
        for b in nbs:
            ref = VarRef(VarKind.MU, b, t)
            mu[b] = _as_binary(val(ref), ref)
            chosen = [i for i in range(t + 1) if _as_binary(val(VarRef(VarKind.EPS, b, t, i)), ref)]
            eps_choice[b] = chosen[0] if len(chosen) == 1 else -1
            if mu[b] and not prev_mu[b]:
                energized.append(b)
                energization_step[b] = t
            prev_mu[b] = mu[b]
        steps.append(
            StepPlan(
                step=t,
                repaired=tuple(repaired),
                energized=tuple(energized),
                dispatch=MappingProxyType({g.id: val(VarRef(VarKind.GEN, g.id, t)) for g in case.generators}),
                flows=MappingProxyType({ln.id: val(VarRef(VarKind.FLOW, ln.id, t)) for ln in case.lines}),
                unserved=MappingProxyType({b.id: val(VarRef(VarKind.LS, b.id, t)) for b in case.buses}),
                demand=MappingProxyType({b.id: scenario.demand(b, t) for b in case.buses}),
                line_status=MappingProxyType({ln.id: val(VarRef(VarKind.LINE_S, ln.id, t)) for ln in case.lines}),
                nbs_status=MappingProxyType(mu),
                beta=MappingProxyType({b: val(VarRef(VarKind.BETA, b, t)) for b in nbs}),
                eps_choice=MappingProxyType(eps_choice),
            )
        )
    return RestorationPlan(
        case_name=case.name,
        horizon=scenario.horizon,
        budget=scenario.budget,
        status=solution.status.value,
        objective=solution.objective,
        gap=solution.gap,
        steps=tuple(steps),
        repair_step=MappingProxyType(repair_step),
        energization_step=MappingProxyType(energization_step),
    )
