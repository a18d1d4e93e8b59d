"""JSON case/scenario files, plan JSON and trajectory CSV.

File layouts are documented in ``docs/formats.md``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from pathlib import Path
from typing import Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .grid import (
    DEFAULT_CRANK_FRACTION,
    Bus,
    DamageScenario,
    Generator,
    GenKind,
    GridCase,
    Line,
    default_horizon,
    validate,
)
from .fsutil import atomic_write
from .model import RestorationPlan

TRAJECTORY_HEADER = ("step", "total_unserved_MW", "lines_repaired", "nbs_energized")


class FormatError(ValueError):
    """A case, scenario or plan file that cannot be loaded."""


# -- file schemas -------------------------------------------------------------


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class _BusDoc(_Strict):
    id: str
    demand: float = Field(ge=0)


class _LineDoc(_Strict):
    id: str
    from_bus: str
    to_bus: str
    f_min: float
    f_max: float
    reactance: float | None = None


class _GenDoc(_Strict):
    id: str
    bus: str
    kind: Literal["BS", "NBS"]
    p_min: float
    p_max: float
    crank_fraction: float = DEFAULT_CRANK_FRACTION


class _CaseDoc(_Strict):
    name: str
    description: str = ""
    buses: list[_BusDoc]
    lines: list[_LineDoc]
    generators: list[_GenDoc]


class _DemandDoc(_Strict):
    bus: str
    step: int
    demand: float = Field(ge=0)


class _ScenarioDoc(_Strict):
    name: str = ""
    description: str = ""
    case: str | None = None
    damaged_lines: Union[list[str], Literal["all"]]
    budget: int
    horizon: int | None = None
    demand_profile: list[_DemandDoc] = Field(default_factory=list)


def _format_errors(path: Path, err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"])
        lines.append(f"{path}: {loc}: {e['msg']}")
    return "\n".join(lines)


def _read_json(path: Path) -> object:
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read file: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


# -- loaders -----------------------------------------------------------------


def load_case(path: str | os.PathLike) -> GridCase:
    path = Path(path)
    raw = _read_json(path)
    try:
        doc = _CaseDoc.model_validate(raw)
    except ValidationError as exc:
        raise FormatError(_format_errors(path, exc)) from None
    case = GridCase(
        name=doc.name,
        buses=tuple(Bus(b.id, b.demand) for b in doc.buses),
        lines=tuple(Line(ln.id, ln.from_bus, ln.to_bus, ln.f_min, ln.f_max, ln.reactance) for ln in doc.lines),
        generators=tuple(
            Generator(g.id, g.bus, GenKind(g.kind), g.p_min, g.p_max, g.crank_fraction) for g in doc.generators
        ),
    )
    report = validate(case)
    if not report.ok:
        raise FormatError(f"{path}: invalid case:\n  " + "\n  ".join(report.messages()))
    return case


def load_scenario(path: str | os.PathLike, case: GridCase | None = None) -> DamageScenario:
    """Read a damage scenario; with ``case`` given, it is checked against it.

    ``damaged_lines`` may be ``"all"`` (requires ``case``). A missing horizon
    defaults to ``ceil(#damaged / budget) + 2``.
    """
    path = Path(path)
    raw = _read_json(path)
    try:
        doc = _ScenarioDoc.model_validate(raw)
    except ValidationError as exc:
        raise FormatError(_format_errors(path, exc)) from None
    if doc.budget < 1:
        raise FormatError(f"{path}: budget: must be >= 1, got {doc.budget}")
    if doc.horizon is not None and doc.horizon < 1:
        raise FormatError(f"{path}: horizon: must be >= 1, got {doc.horizon}")
    if doc.damaged_lines == "all":
        if case is None:
            raise FormatError(f"{path}: damaged_lines: 'all' needs the case to resolve line ids")
        damaged = [ln.id for ln in case.lines]
    else:
        damaged = list(doc.damaged_lines)
        if len(set(damaged)) != len(damaged):
            raise FormatError(f"{path}: damaged_lines: duplicate line ids")
    horizon = doc.horizon if doc.horizon is not None else default_horizon(len(damaged), doc.budget)
    profile: dict[tuple[str, int], float] = {}
    for k, d in enumerate(doc.demand_profile):
        key = (d.bus, d.step)
        if key in profile:
            raise FormatError(f"{path}: demand_profile.{k}: duplicate entry for bus {d.bus} step {d.step}")
        profile[key] = d.demand
    scenario = DamageScenario(frozenset(damaged), doc.budget, horizon, profile)
    if case is not None:
        report = validate(case, scenario)
        if not report.ok:
            raise FormatError(f"{path}: scenario does not fit case {case.name!r}:\n  " + "\n  ".join(report.messages()))
    return scenario


def scenario_case_path(path: str | os.PathLike) -> Path | None:
    """The case file a scenario points at, resolved relative to the scenario."""
    path = Path(path)
    raw = _read_json(path)
    ref = raw.get("case") if isinstance(raw, dict) else None
    if not ref:
        return None
    return (path.parent / ref).resolve()


# -- writers -----------------------------------------------------------------


def case_to_dict(case: GridCase) -> dict:
    return {
        "name": case.name,
        "buses": [{"id": b.id, "demand": b.demand} for b in case.buses],
        "lines": [
            {"id": ln.id, "from_bus": ln.from_bus, "to_bus": ln.to_bus, "f_min": ln.f_min, "f_max": ln.f_max}
            | ({"reactance": ln.reactance} if ln.reactance is not None else {})
            for ln in case.lines
        ],
        "generators": [
            {"id": g.id, "bus": g.bus, "kind": g.kind.value, "p_min": g.p_min, "p_max": g.p_max,
             "crank_fraction": g.crank_fraction}
            for g in case.generators
        ],
    }


def write_case(case: GridCase, path: str | os.PathLike) -> None:
    atomic_write(path, json.dumps(case_to_dict(case), indent=2) + "\n")


def scenario_to_dict(scenario: DamageScenario, case_ref: str | None = None) -> dict:
    doc: dict = {}
    if case_ref:
        doc["case"] = case_ref
    doc["damaged_lines"] = sorted(scenario.damaged_line_ids)
    doc["budget"] = scenario.budget
    doc["horizon"] = scenario.horizon
    if scenario.demand_profile:
        doc["demand_profile"] = [
            {"bus": b, "step": t, "demand": v} for (b, t), v in sorted(scenario.demand_profile.items())
        ]
    return doc


def write_scenario(scenario: DamageScenario, path: str | os.PathLike, case_ref: str | None = None) -> None:
    atomic_write(path, json.dumps(scenario_to_dict(scenario, case_ref), indent=2) + "\n")


def fmt(v: float) -> str:
    """Render a MW value: 10 significant digits, solver noise below 1e-9 shown as 0."""
    if abs(v) < 1e-9:
        return "0"
    return f"{v:.10g}"


def _clean(v: float) -> float:
    return float(fmt(v))


def trajectory_csv(plan: RestorationPlan) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_HEADER)
    for step, unserved, repaired, energized in plan.trajectory():
        w.writerow([step, fmt(unserved), repaired, energized])
    return buf.getvalue()


def write_trajectory(plan: RestorationPlan, path: str | os.PathLike) -> None:
    atomic_write(path, trajectory_csv(plan))


def read_trajectory(path: str | os.PathLike) -> list[dict[str, float]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRAJECTORY_HEADER:
            raise FormatError(f"{path}: unexpected trajectory header {reader.fieldnames}")
        return [
            {"step": int(r["step"]), "total_unserved_MW": float(r["total_unserved_MW"]),
             "lines_repaired": int(r["lines_repaired"]), "nbs_energized": int(r["nbs_energized"])}
            for r in reader
        ]


def plan_to_dict(plan: RestorationPlan) -> dict:
    def clean_map(m):
        return {k: _clean(v) for k, v in m.items()}

    return {
        "case": plan.case_name,
        "status": plan.status,
        "objective_MW_steps": _clean(plan.objective),
        "gap": plan.gap if math.isfinite(plan.gap) else None,
        "horizon": plan.horizon,
        "budget": plan.budget,
        "repair_step": dict(plan.repair_step),
        "energization_step": dict(plan.energization_step),
        "steps": [
            {
                "step": s.step,
                "total_demand_MW": _clean(s.total_demand),
                "total_unserved_MW": _clean(s.total_unserved),
                "lines_repaired": list(s.repaired),
                "nbs_energized": list(s.energized),
                "nbs_status": dict(s.nbs_status),
                "dispatch_MW": clean_map(s.dispatch),
                "flows_MW": clean_map(s.flows),
                "unserved_MW": clean_map(s.unserved),
            }
            for s in plan.steps
        ],
    }


def write_plan(plan: RestorationPlan, path: str | os.PathLike) -> None:
    atomic_write(path, json.dumps(plan_to_dict(plan), indent=2) + "\n")
