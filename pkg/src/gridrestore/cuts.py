"""Connectivity inequalities for the restoration MILP.

Every MW that reaches a bus at step t originates at a black-start unit: an
NBS unit can only produce after being cranked through lines that are still
in service afterwards. Hence for any bus set U holding no black-start unit
and any bus b in U,

    (D_b + Pc_b) - LS[b,t] <= (D_b + Pc_b) * sum(S[a,t] for a crossing U)
    mu[b,t]                <= sum(S[a,t] for a crossing U)       (b NBS)

Both hold for every integer-feasible point. Violated members are found
with one minimum cut per (bus, step) on the graph weighted by S[., t].
"""

from __future__ import annotations

import networkx as nx
import numpy as np

from .grid import DamageScenario, GridCase, cranking_power
from .model import VarKind, VarRef
from .solver.instance import MilpInstance, Row, Sense

_SOURCE = "__bs__"


class ConnectivitySeparator:
    def __init__(self, case: GridCase, scenario: DamageScenario, instance: MilpInstance, *, tol: float = 1e-6):
        self.case = case
        self.scenario = scenario
        self.idx = instance.index
        self.tol = tol
        self.bs_buses = sorted({g.bus for g in case.generators if not g.is_nbs})
        self.nbs = case.nbs_by_bus()
        self.crank = {b: cranking_power(g) for b, g in self.nbs.items()}
        self.seen: set[tuple] = set()

    def _graph(self, x: np.ndarray, t: int) -> nx.Graph:
        G = nx.Graph()
        G.add_nodes_from(b.id for b in self.case.buses)
        G.add_node(_SOURCE)
        for ln in self.case.lines:
            cap = float(x[self.idx[VarRef(VarKind.LINE_S, ln.id, t)]])
            if G.has_edge(ln.from_bus, ln.to_bus):
                G[ln.from_bus][ln.to_bus]["capacity"] += cap
            else:
                G.add_edge(ln.from_bus, ln.to_bus, capacity=cap)
        for b in self.bs_buses:
            G.add_edge(_SOURCE, b, capacity=float("inf"))
        return G

    def _crossing(self, side: set[str]) -> list[str]:
        return [ln.id for ln in self.case.lines if (ln.from_bus in side) != (ln.to_bus in side)]

    def separate(self, x: np.ndarray, max_cuts: int | None = None) -> list[Row]:
        bs = set(self.bs_buses)
        rows: list[Row] = []
        for t in self.scenario.steps:
            G = None
            for bus in self.case.buses:
                if bus.id in bs:
                    continue
                full = self.scenario.demand(bus, t) + self.crank.get(bus.id, 0.0)
                served = 0.0
                if full > 0:
                    served = 1.0 - float(x[self.idx[VarRef(VarKind.LS, bus.id, t)]]) / full
                mu = float(x[self.idx[VarRef(VarKind.MU, bus.id, t)]]) if bus.id in self.nbs else 0.0
                need = max(served, mu)
                if need <= self.tol:
                    continue
                if G is None:
                    G = self._graph(x, t)
                if not bs:
                    value, sink_side = 0.0, set(G.nodes) - {_SOURCE}
                else:
                    value, (_, sink_side) = nx.minimum_cut(G, _SOURCE, bus.id)
                if value >= need - self.tol:
                    continue
                crossing = self._crossing(set(sink_side))
                s_terms = [(self.idx[VarRef(VarKind.LINE_S, a, t)], 1.0) for a in crossing]
                if served > value + self.tol:
                    key = ("ls", bus.id, t, tuple(crossing))
                    if key not in self.seen:
                        self.seen.add(key)
                        ls = self.idx[VarRef(VarKind.LS, bus.id, t)]
                        rows.append(Row(((ls, 1.0),) + tuple((j, full) for j, _ in s_terms), Sense.GE, full,
                                        f"conn_{bus.id}_t{t}_{len(self.seen)}"))
                if bus.id in self.nbs and mu > value + self.tol:
                    key = ("mu", bus.id, t, tuple(crossing))
                    if key not in self.seen:
                        self.seen.add(key)
                        m = self.idx[VarRef(VarKind.MU, bus.id, t)]
                        rows.append(Row(((m, 1.0),) + tuple((j, -1.0) for j, _ in s_terms), Sense.LE, 0.0,
                                        f"connmu_{bus.id}_t{t}_{len(self.seen)}"))
                if max_cuts is not None and len(rows) >= max_cuts:
                    return rows
        return rows
