from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Status(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    GAP_LIMIT = "GapLimit"
    NODE_LIMIT = "NodeLimit"
    NUMERICAL = "NumericalFailure"

    @property
    def has_solution(self) -> bool:
        return self in (Status.OPTIMAL, Status.GAP_LIMIT, Status.NODE_LIMIT)


# Tolerances shared by the LP and branch-and-bound layers.
FEAS_TOL = 1e-8
INT_TOL = 1e-6
GAP_TOL = 1e-6


@dataclass(frozen=True)
class Limits:
    gap: float = GAP_TOL
    nodes: int | None = None
    time: float | None = None


@dataclass
class Solution:
    status: Status
    values: np.ndarray | None = None
    objective: float = float("nan")
    gap: float = float("inf")
    nodes: int = 0
    bound: float = float("-inf")
    # populated by LP solves
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    dual_bound: float = float("nan")
    iterations: int = 0
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status.has_solution and self.values is not None

    def duality_residual(self) -> float:
        return abs(self.objective - self.dual_bound)
