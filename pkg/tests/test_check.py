import dataclasses
from types import MappingProxyType

import pytest

from gridrestore.check import check_plan
from gridrestore.oracle import chain3
from gridrestore.restore import solve


def tamper(plan, step, **changes):
    """Copy of ``plan`` with fields of one step replaced (mappings are merged)."""
    steps = list(plan.steps)
    sp = steps[step - 1]
    fields = {}
    for name, value in changes.items():
        old = getattr(sp, name)
        fields[name] = MappingProxyType({**old, **value}) if isinstance(value, dict) else value
    steps[step - 1] = dataclasses.replace(sp, **fields)
    return dataclasses.replace(plan, steps=tuple(steps))


@pytest.fixture(scope="module")
def chain():
    case, scenario = chain3(1)
    return solve(case, scenario).plan, case, scenario


def test_solved_plans_pass(chain, solved9, ieee9):
    plan, case, scenario = chain
    assert check_plan(plan, case, scenario) == []
    assert check_plan(solved9.plan, *ieee9) == []


@pytest.mark.parametrize(
    "step, changes, fragment",
    [
        (1, {"unserved": {"2": 5.0}}, "balance at bus 2"),
        (1, {"flows": {"L2": 5.0}}, "flow 5.0 on L2"),
        (1, {"line_status": {"L2": 1.0}}, "status of L2"),
        (1, {"repaired": ("L1", "L2")}, "exceed budget"),
        (1, {"dispatch": {"G3": 50.0}}, "NBS G3"),
        (1, {"dispatch": {"G1": 55.0}}, "G1 output"),
        (2, {"beta": {"3": 0.5}}, "beta*Pc"),
        (3, {"nbs_status": {"3": 0}}, "status decreased"),
        (2, {"eps_choice": {"3": 7}}, "selector"),
        (2, {"eps_choice": {"3": 0}}, "exceeds its selected candidate"),
    ],
)
def test_tampering_detected(chain, step, changes, fragment):
    plan, case, scenario = chain
    msgs = check_plan(tamper(plan, step, **changes), case, scenario)
    assert any(fragment in m for m in msgs), msgs


def test_repeated_repair_detected(chain):
    plan, case, scenario = chain
    bad = tamper(plan, 3, repaired=("L1",))
    assert "line L1 repaired 2 times" in check_plan(bad, case, scenario)


def test_horizon_mismatch(chain):
    plan, case, scenario = chain
    short = dataclasses.replace(plan, steps=plan.steps[:2])
    assert any("horizon is 3" in m for m in check_plan(short, case, scenario))
