"""Re-check a decoded plan against the restoration constraints.

Works from the plan's reported values and the raw case data only; nothing
here touches the MILP instance or the solver.
"""

from __future__ import annotations

import math

from .grid import DamageScenario, GridCase, cranking_power
from .model import RestorationPlan

DEFAULT_TOL = 1e-6


def check_plan(plan: RestorationPlan, case: GridCase, scenario: DamageScenario, tol: float = DEFAULT_TOL) -> list[str]:
    """Return one message per violated constraint (empty when the plan is valid)."""
    bad: list[str] = []
    nbs = case.nbs_by_bus()
    crank = {b: cranking_power(g) for b, g in nbs.items()}
    damaged = scenario.damaged_line_ids
    if len(plan.steps) != scenario.horizon:
        bad.append(f"plan has {len(plan.steps)} steps, horizon is {scenario.horizon}")

    repairs: dict[str, int] = {a: 0 for a in damaged}
    prev_mu = {b: 0 for b in nbs}
    betas: dict[str, list[float]] = {b: [] for b in nbs}
    for sp in plan.steps:
        t = sp.step
        # repairs, status and budget
        for a in sp.repaired:
            if a not in damaged:
                bad.append(f"t{t}: undamaged line {a} repaired")
            else:
                repairs[a] += 1
        if len(sp.repaired) > scenario.budget:
            bad.append(f"t{t}: {len(sp.repaired)} repairs exceed budget {scenario.budget}")
        for ln in case.lines:
            expect = 1.0 if ln.id not in damaged or 0 < repairs[ln.id] else 0.0
            s = sp.line_status[ln.id]
            if abs(s - expect) > tol:
                bad.append(f"t{t}: status of {ln.id} is {s}, repairs imply {expect}")
            f = sp.flows[ln.id]
            if f > s * ln.f_max + tol or f < s * ln.f_min - tol:
                bad.append(f"t{t}: flow {f} on {ln.id} outside [{s * ln.f_min}, {s * ln.f_max}]")

        # bus balance and shedding bounds
        inflow = {b.id: 0.0 for b in case.buses}
        for ln in case.lines:
            inflow[ln.to_bus] += sp.flows[ln.id]
            inflow[ln.from_bus] -= sp.flows[ln.id]
        for bus in case.buses:
            d = scenario.demand(bus, t)
            ls = sp.unserved[bus.id]
            gen = math.fsum(sp.dispatch[g.id] for g in case.generators_at(bus.id))
            resid = gen + ls + inflow[bus.id] - d
            if abs(resid) > tol:
                bad.append(f"t{t}: balance at bus {bus.id} off by {resid}")
            cap = d + crank.get(bus.id, 0.0)
            if ls < -tol or ls > cap + tol:
                bad.append(f"t{t}: unserved {ls} at bus {bus.id} outside [0, {cap}]")

        # generators
        for g in case.generators:
            p = sp.dispatch[g.id]
            if not g.is_nbs:
                if p < g.p_min - tol or p > g.p_max + tol:
                    bad.append(f"t{t}: {g.id} output {p} outside [{g.p_min}, {g.p_max}]")
                continue
            on = prev_mu[g.bus]
            lo, hi = (g.p_min, g.p_max) if on else (-crank[g.bus], -crank[g.bus])
            if p < lo - tol or p > hi + tol:
                bad.append(f"t{t}: NBS {g.id} output {p} outside [{lo}, {hi}] (energized before t: {bool(on)})")

        # cranking inflow and the max-selection for mu
        for b in nbs:
            beta = sp.beta[b]
            if abs(beta * crank[b] - inflow[b]) > tol * max(1.0, crank[b]):
                bad.append(f"t{t}: beta*Pc = {beta * crank[b]} but inflow at {b} is {inflow[b]}")
            betas[b].append(beta)
            mu = sp.nbs_status[b]
            if mu < prev_mu[b]:
                bad.append(f"t{t}: NBS bus {b} status decreased")
            if any(mu < bi - tol for bi in betas[b]):
                bad.append(f"t{t}: mu at {b} below some beta")
            sel = sp.eps_choice[b]
            if not 0 <= sel <= t:
                bad.append(f"t{t}: selector at {b} does not pick exactly one candidate")
            else:
                chosen = 0.0 if sel == 0 else betas[b][sel - 1]
                if mu > chosen + tol:
                    bad.append(f"t{t}: mu at {b} exceeds its selected candidate {chosen}")
            prev_mu[b] = mu

    for a, k in repairs.items():
        if k > 1:
            bad.append(f"line {a} repaired {k} times")
    return bad
