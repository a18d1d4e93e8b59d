"""Self-contained MILP engine: bounded simplex, branch-and-bound, LP-file export."""

from .bnb import solve_milp
from .instance import InstanceBuilder, MilpInstance, Sense
from .lpformat import export_lp, lp_text
from .result import Limits, Solution, Status
from .simplex import solve_lp

__all__ = [
    "InstanceBuilder",
    "Limits",
    "MilpInstance",
    "Sense",
    "Solution",
    "Status",
    "export_lp",
    "lp_text",
    "solve_lp",
    "solve_milp",
]
