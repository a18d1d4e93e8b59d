"""Minimum-unserved-load restoration schedules for damaged transmission grids."""

from .grid import Bus, DamageScenario, Generator, GenKind, GridCase, Line, validate
from .io import load_case, load_scenario
from .model import RestorationPlan, build, decode
from .restore import solve

__all__ = [
    "Bus",
    "DamageScenario",
    "GenKind",
    "Generator",
    "GridCase",
    "Line",
    "RestorationPlan",
    "build",
    "decode",
    "load_case",
    "load_scenario",
    "solve",
    "validate",
]
