"""Branch-and-bound over binary columns."""

from __future__ import annotations

import heapq
import itertools
import logging
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .instance import MilpInstance, Row
from .result import INT_TOL, Limits, Solution, Status
from .simplex import BasisState, LPEngine

log = logging.getLogger(__name__)

Separator = Callable[[np.ndarray], Sequence[Row]]


@dataclass
class _Node:
    bound: float
    depth: int
    fixes: tuple[tuple[int, int], ...]
    basis: BasisState | None


class _Pool:
    """Open nodes, served best-bound first or, on request, last-in first-out."""

    def __init__(self) -> None:
        self._heap: list[list] = []
        self._stack: list[list] = []
        self._seq = itertools.count()
        self.size = 0

    def push(self, node: _Node, *, track: bool) -> None:
        entry = [node.bound, -node.depth, next(self._seq), node]
        heapq.heappush(self._heap, entry)
        if track:
            self._stack.append(entry)
        self.size += 1

    def _take(self, entry: list) -> _Node:
        node, entry[3] = entry[3], None
        self.size -= 1
        return node

    def pop(self, cutoff: float, *, lifo: bool) -> _Node | None:
        while lifo and self._stack:
            entry = self._stack.pop()
            if entry[3] is not None:
                if entry[0] < cutoff:
                    return self._take(entry)
                self._take(entry)
        self._stack.clear()
        while self._heap:
            entry = heapq.heappop(self._heap)
            if entry[3] is not None:
                if entry[0] < cutoff:
                    return self._take(entry)
                self._take(entry)
        return None

    def best_bound(self) -> float:
        return min((e[0] for e in self._heap if e[3] is not None), default=float("inf"))


def _most_fractional(x: np.ndarray, bins: np.ndarray, priority: np.ndarray | None = None) -> int:
    """Column index of the binary to branch on, or -1 when all are integral.

    Among fractional binaries of the lowest ``priority`` class, the most
    fractional one is chosen; ties go to the lowest index.
    """
    if len(bins) == 0:
        return -1
    v = x[bins]
    frac = np.abs(v - np.round(v))
    fractional = frac > INT_TOL
    if not fractional.any():
        return -1
    if priority is not None:
        p = priority[bins]
        fractional &= p == p[fractional].min()
    frac = np.where(fractional, frac, -1.0)
    return int(bins[int(np.argmax(frac))])


def _rel_gap(incumbent: float, bound: float) -> float:
    if not np.isfinite(incumbent):
        return float("inf")
    return max(0.0, incumbent - bound) / max(1.0, abs(incumbent))


class BranchAndBound:
    """Search state shared by successive searches over one instance.

    The LP engine, the cut rows found so far and the root basis survive from
    one :meth:`search` to the next, which is what makes staged heuristics
    such as :meth:`relax_and_fix` affordable.
    """

    def __init__(
        self,
        instance: MilpInstance,
        *,
        separator: Separator | None = None,
        cut_rounds: int = 25,
        priority: np.ndarray | None = None,
    ):
        self.instance = instance
        self.engine = LPEngine(instance)
        self.separator = separator
        self.cut_rounds = cut_rounds
        self.priority = priority
        self.bins = instance.binaries
        self.nodes = 0
        self.iterations = 0
        self.n_cuts = 0
        self.root_basis: BasisState | None = None
        self.root_bound = float("-inf")
        self.deadline = float("inf")  # perf_counter value after which every search stops

    # -- LP plumbing ------------------------------------------------------

    def _lp(self, lb, ub, start):
        sol, basis = self.engine.solve(lb, ub, start=start)
        self.iterations += sol.iterations
        return sol, basis

    def _bounds(self, base: tuple[np.ndarray, np.ndarray], fixes) -> tuple[np.ndarray, np.ndarray]:
        lb, ub = base[0].copy(), base[1].copy()
        for j, v in fixes:
            lb[j] = ub[j] = v
        return lb, ub

    def _separate(self, sol, basis, lb, ub, cutoff: float):
        for _ in range(self.cut_rounds):
            if sol.status is not Status.OPTIMAL or sol.objective >= cutoff:
                break
            rows = list(self.separator(sol.values))
            if not rows:
                break
            self.engine.add_rows(rows)
            self.n_cuts += len(rows)
            sol, basis = self._lp(lb, ub, basis)
        return sol, basis

    def solve_root(self) -> Solution:
        """LP relaxation at the root, tightened by the separator if any."""
        lb, ub = self.instance.lb, self.instance.ub
        sol, basis = self._lp(lb, ub, None)
        self.nodes += 1
        if self.separator is not None:
            sol, basis = self._separate(sol, basis, lb, ub, float("inf"))
        self.root_basis = basis
        if sol.status is Status.OPTIMAL:
            self.root_bound = sol.objective
        return sol

    def _fixed_lp(self, x: np.ndarray, cols: np.ndarray, lb, ub, start) -> Solution | None:
        """Re-solve with ``cols`` fixed to the rounded values of ``x``."""
        lb, ub = lb.copy(), ub.copy()
        r = np.round(x[cols])
        lb[cols] = r
        ub[cols] = r
        sol, _ = self._lp(lb, ub, start)
        return sol if sol.status is Status.OPTIMAL else None

    # -- tree search -------------------------------------------------------

    def search(
        self,
        limits: Limits,
        *,
        lb: np.ndarray | None = None,
        ub: np.ndarray | None = None,
        int_cols: np.ndarray | None = None,
        incumbent: np.ndarray | None = None,
        log_progress: bool = True,
    ) -> Solution:
        """Branch on ``int_cols`` (default: every binary) within bounds ``lb``/``ub``."""
        started = time.perf_counter()
        base = (self.instance.lb if lb is None else lb, self.instance.ub if ub is None else ub)
        bins = self.bins if int_cols is None else int_cols
        priority = self.priority
        nodes0 = self.nodes

        inc_x: np.ndarray | None = None
        inc_obj = float("inf")
        if incumbent is not None:
            inc_x, inc_obj = incumbent, self.instance.evaluate(incumbent)

        def cutoff() -> float:
            if not np.isfinite(inc_obj):
                return float("inf")
            return inc_obj - limits.gap * max(1.0, abs(inc_obj))

        def out_of_budget() -> Status | None:
            if limits.nodes is not None and self.nodes - nodes0 >= limits.nodes:
                return Status.NODE_LIMIT
            now = time.perf_counter()
            if now > self.deadline or (limits.time is not None and now - started > limits.time):
                return Status.GAP_LIMIT
            return None

        root = _Node(float("-inf"), 0, (), self.root_basis)
        sol, basis = self._lp(*base, self.root_basis)
        self.nodes += 1
        if sol.status is not Status.OPTIMAL:
            return Solution(sol.status, nodes=self.nodes - nodes0, iterations=self.iterations, info=sol.info)
        bound0 = sol.objective

        pool = _Pool()
        current: tuple[_Node, Solution, BasisState | None] | None = (root, sol, basis)
        stop: Status | None = None
        while True:
            if current is None:
                stop = out_of_budget()
                if stop is not None:
                    break
                node = pool.pop(cutoff(), lifo=inc_x is None)
                if node is None:
                    break
                if log_progress and (self.nodes - nodes0) % 200 == 0:
                    log.info("nodes %d open %d incumbent %.9g bound %.9g %.1fs", self.nodes - nodes0, pool.size,
                             inc_obj, min(node.bound, pool.best_bound()), time.perf_counter() - started)
                sol, basis = self._lp(*self._bounds(base, node.fixes), node.basis)
                self.nodes += 1
                current = (node, sol, basis)

            node, sol, basis = current
            current = None
            if sol.status is Status.INFEASIBLE:
                continue
            if sol.status is not Status.OPTIMAL:
                # an LP that fails numerically inside the tree is dropped, but the
                # result can no longer be certified optimal
                log.warning("node LP status %s at depth %d; node dropped", sol.status.value, node.depth)
                stop = stop or Status.NUMERICAL
                continue
            if sol.objective >= cutoff():
                continue

            j = _most_fractional(sol.values, bins, priority)
            if j < 0:
                clean = self._fixed_lp(sol.values, bins, *self._bounds(base, node.fixes), basis)
                if clean is not None and clean.objective < inc_obj:
                    inc_obj, inc_x = clean.objective, clean.values
                    if log_progress:
                        log.info("incumbent %.9g at node %d (%.1fs)", inc_obj, self.nodes - nodes0,
                                 time.perf_counter() - started)
                continue

            limit = out_of_budget()
            if limit is not None:
                pool.push(_Node(sol.objective, node.depth, node.fixes, basis), track=False)
                stop = limit
                break

            up_first = sol.values[j] >= 0.5
            near = _Node(sol.objective, node.depth + 1, node.fixes + ((j, 1 if up_first else 0),), basis)
            far = _Node(sol.objective, node.depth + 1, node.fixes + ((j, 0 if up_first else 1),), basis)
            pool.push(far, track=inc_x is None)
            nsol, nbasis = self._lp(*self._bounds(base, near.fixes), basis)
            self.nodes += 1
            current = (near, nsol, nbasis)

        n = self.nodes - nodes0
        open_bound = pool.best_bound()
        best_bound = min(open_bound, inc_obj)
        if stop is Status.NUMERICAL and inc_x is None:
            return Solution(Status.NUMERICAL, nodes=n, iterations=self.iterations, bound=bound0)
        if inc_x is None:
            if stop is None:
                return Solution(Status.INFEASIBLE, nodes=n, iterations=self.iterations)
            return Solution(stop, nodes=n, iterations=self.iterations, bound=open_bound)

        gap = _rel_gap(inc_obj, best_bound)
        if stop is Status.NUMERICAL:
            status = Status.NUMERICAL
        elif stop is None:
            status = Status.OPTIMAL if gap <= limits.gap else Status.GAP_LIMIT
        else:
            status = stop if gap > limits.gap else Status.OPTIMAL
        return Solution(
            status,
            values=inc_x,
            objective=inc_obj,
            gap=gap,
            nodes=n,
            bound=best_bound,
            iterations=self.iterations,
            info={"seconds": time.perf_counter() - started},
        )

    # -- primal heuristic ------------------------------------------------------

    def relax_and_fix(self, stage: np.ndarray, *, nodes_per_stage: int = 200, gap: float = 1e-4) -> np.ndarray | None:
        """Feasible point built one stage of binaries at a time.

        Stages are taken in increasing ``stage`` value. At each one, the
        binaries of earlier stages stay fixed, those of later stages are
        relaxed, and a node-limited search settles the current stage.
        Returns the point, or None when some stage finds nothing.
        """
        lb, ub = self.instance.lb.copy(), self.instance.ub.copy()
        for s in sorted(set(stage[self.bins].tolist())):
            cols = self.bins[stage[self.bins] == s]
            sol = self.search(Limits(gap=gap, nodes=nodes_per_stage), lb=lb, ub=ub, int_cols=cols, log_progress=False)
            if not sol.ok:
                log.info("relax-and-fix: stage %s gave %s", s, sol.status.value)
                return None
            r = np.round(sol.values[cols])
            lb[cols] = r
            ub[cols] = r
            log.info("relax-and-fix: stage %s fixed, objective %.9g, %d nodes", s, sol.objective, sol.nodes)
        final = self._fixed_lp(lb, self.bins, lb, ub, self.root_basis)
        return None if final is None else final.values

    def fix_and_optimize(
        self, x: np.ndarray, stage: np.ndarray, *, window: int = 2, nodes_per_window: int = 200, gap: float = 1e-4
    ) -> np.ndarray:
        """Improve the feasible point ``x`` one window of consecutive stages at a time.

        All binaries outside the window stay at their values in ``x``; the
        window is re-searched with ``x`` as incumbent, so the result is never
        worse than ``x``.
        """
        bins = self.bins
        levels = sorted(set(stage[bins].tolist()))
        for k in range(max(1, len(levels) - window + 1)):
            free = np.isin(stage[bins], levels[k : k + window])
            lb, ub = self.instance.lb.copy(), self.instance.ub.copy()
            fixed = bins[~free]
            lb[fixed] = np.round(x[fixed])
            ub[fixed] = np.round(x[fixed])
            before = self.instance.evaluate(x)
            sol = self.search(Limits(gap=gap, nodes=nodes_per_window), lb=lb, ub=ub, int_cols=bins[free],
                              incumbent=x, log_progress=False)
            if sol.ok and sol.objective < before:
                x = sol.values
            log.info("fix-and-optimize: stages %s, objective %.9g, %d nodes", levels[k : k + window],
                     self.instance.evaluate(x), sol.nodes)
        return x


def solve_milp(
    instance: MilpInstance,
    limits: Limits | None = None,
    *,
    separator: Separator | None = None,
    cut_rounds: int = 25,
    priority: np.ndarray | None = None,
    stages: np.ndarray | None = None,
    nodes_per_stage: int = 200,
) -> Solution:
    """Minimize ``instance`` to the relative gap in ``limits``.

    Nodes are taken best-bound first; after branching, the child on the side
    the variable was closer to is solved immediately (a plunge) and its
    sibling is queued. Until a first incumbent exists, queued siblings are
    revisited last-in first-out, i.e. the search backtracks depth-first.

    ``separator`` maps an LP point to rows that every integer-feasible point
    satisfies but the LP point violates; it runs for up to ``cut_rounds``
    rounds at the root and its rows are kept. ``priority`` (one int per
    column, lower first) restricts branching to the most urgent fractional
    class. ``stages`` (one int per column) enables the relax-and-fix start
    heuristic followed by fix-and-optimize over pairs of stages.

    The node limit applies to the main search; the heuristics have their
    own per-stage limit. The time limit is a deadline for everything after
    the root.
    """
    limits = limits or Limits()
    started = time.perf_counter()
    bb = BranchAndBound(instance, separator=separator, cut_rounds=cut_rounds, priority=priority)
    if limits.time is not None:
        bb.deadline = started + limits.time
    root = bb.solve_root()
    if root.status is not Status.OPTIMAL:
        return Solution(root.status, nodes=bb.nodes, iterations=bb.iterations, info=root.info)
    log.info("root bound %.9g after %d cuts (%.1fs)", bb.root_bound, bb.n_cuts, time.perf_counter() - started)

    incumbent = None
    if stages is not None:
        incumbent = bb.relax_and_fix(stages, nodes_per_stage=nodes_per_stage)
        if incumbent is not None:
            incumbent = bb.fix_and_optimize(incumbent, stages, nodes_per_window=nodes_per_stage)
            log.info("start incumbent %.9g (%.1fs)", instance.evaluate(incumbent), time.perf_counter() - started)
    heuristic_nodes = bb.nodes

    sol = bb.search(Limits(gap=limits.gap, nodes=limits.nodes), incumbent=incumbent)
    sol.nodes = bb.nodes
    sol.info.update(
        root_bound=bb.root_bound,
        cuts=bb.n_cuts,
        heuristic_nodes=heuristic_nodes,
        seconds=time.perf_counter() - started,
    )
    return sol
