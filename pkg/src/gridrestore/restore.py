"""End-to-end solve: build, strengthen, branch-and-bound, decode."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cuts import ConnectivitySeparator
from .grid import DamageScenario, GridCase
from .model import RestorationPlan, build, decode
from .solver.bnb import solve_milp
from .solver.instance import MilpInstance
from .solver.result import Limits, Solution


@dataclass(frozen=True)
class RestoreResult:
    instance: MilpInstance
    solution: Solution
    plan: RestorationPlan | None


def step_priority(instance: MilpInstance) -> np.ndarray:
    """Branch on decisions of earlier steps first."""
    return np.array([getattr(c.key, "step", 0) for c in instance.columns], dtype=int)


def solve(
    case: GridCase,
    scenario: DamageScenario,
    limits: Limits | None = None,
    *,
    angle_mode: bool = False,
    cuts: bool = True,
    heuristic: bool = True,
) -> RestoreResult:
    """Solve the restoration MILP.

    With ``cuts`` (the default) the formulation carries the valid
    inequalities of ``build(strengthen=True)`` and connectivity cuts are
    separated at the root. With ``heuristic``, a relax-and-fix pass over
    the steps supplies a starting incumbent. None of this changes the
    optimum, only the search.
    """
    instance = build(case, scenario, angle_mode=angle_mode, strengthen=cuts)
    separator = ConnectivitySeparator(case, scenario, instance).separate if cuts else None
    priority = step_priority(instance)
    sol = solve_milp(instance, limits, separator=separator, priority=priority,
                     stages=priority if heuristic else None)
    plan = decode(instance, sol, case, scenario) if sol.ok else None
    return RestoreResult(instance, sol, plan)
