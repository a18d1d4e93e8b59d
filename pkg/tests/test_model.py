import dataclasses

import numpy as np
import pytest

from gridrestore.grid import Line
from gridrestore.model import VarKind, VarRef, big_m, build, decode, expected_counts
from gridrestore.oracle import chain3, random_instance
from gridrestore.restore import solve
from gridrestore.solver import Solution, Status, solve_milp


def counts_of(instance):
    out = {}
    for c in instance.columns:
        out[c.key.kind.value] = out.get(c.key.kind.value, 0) + 1
    return out


def test_9bus_dimensions(ieee9):
    inst = build(*ieee9)
    assert (inst.n_cols, inst.n_rows, len(inst.binaries)) == (200, 226, 72)
    exp = expected_counts(9, 9, 9, 3, 2, 4)
    assert (exp["columns"], exp["rows"], exp["binary"]) == (200, 226, 72)
    got = counts_of(inst)
    for kind in ("LS", "P", "f", "S", "B", "beta", "mu", "eps"):
        assert got[kind] == exp[kind], kind


@pytest.mark.parametrize("seed", [101, 104, 109])
def test_expected_counts_random(seed):
    case, scenario = random_instance(seed)
    inst = build(case, scenario)
    exp = expected_counts(len(case.buses), len(case.lines), len(scenario.damaged_line_ids),
                          len(case.generators), len(case.nbs_generators()), scenario.horizon)
    assert (inst.n_cols, inst.n_rows, len(inst.binaries)) == (exp["columns"], exp["rows"], exp["binary"])


def test_strengthen_adds_rows_only(ieee9):
    weak, strong = build(*ieee9), build(*ieee9, strengthen=True)
    assert weak.columns == strong.columns
    # cutzero and cutconn per NBS and step, cutmono from step 2
    assert strong.n_rows - weak.n_rows == 2 * (4 + 4 + 3)


def test_angle_mode_adds_angles(ieee9):
    inst = build(*ieee9, angle_mode=True)
    assert inst.n_cols == 200 + 9 * 4
    assert inst.n_rows == 226 + 2 * 9 * 4


def test_angle_mode_needs_reactance(ieee9):
    case, scenario = ieee9
    bare = dataclasses.replace(case, lines=(dataclasses.replace(case.lines[0], reactance=None),) + case.lines[1:])
    with pytest.raises(ValueError, match="reactance"):
        build(bare, scenario, angle_mode=True)


def test_build_rejects_invalid_inputs(ieee9):
    case, scenario = ieee9
    broken = dataclasses.replace(case, lines=case.lines + (Line("X", "1", "1", -1, 1),))
    with pytest.raises(ValueError, match="self-loop"):
        build(broken, scenario)


def test_big_m_bounds_beta():
    case, _ = chain3(1)
    # incident capacity 200 over cranking power 10
    assert big_m(case, "3") == pytest.approx(21.0)


def test_undamaged_lines_fixed_in_service(ieee9):
    case, scenario = ieee9
    scenario = dataclasses.replace(scenario, damaged_line_ids=frozenset({"L1"}))
    inst = build(case, scenario)
    s = inst.columns[inst.index[VarRef(VarKind.LINE_S, "L2", 1)]]
    assert (s.lb, s.ub) == (1.0, 1.0)
    assert VarRef(VarKind.LINE_B, "L2", 1) not in inst.index


def test_nbs_starts_at_minus_cranking(ieee9):
    case, scenario = ieee9
    inst = build(case, scenario)
    row = next(r for r in inst.rows if r.name == "genlo_G2_t1")
    assert row.rhs == pytest.approx(-30.0)
    assert row.sense.value == "="


def test_decode_chain():
    case, scenario = chain3(2)
    res = solve(case, scenario)
    plan = res.plan
    assert plan.objective == pytest.approx(0.0, abs=1e-9)
    assert plan.repair_step == {"L1": 1, "L2": 1}
    assert plan.energization_step == {"3": 1}
    assert [s.total_demand for s in plan.steps] == [20.0] * 3


def test_decode_rejects_bad_solutions():
    case, scenario = chain3(1)
    inst = build(case, scenario)
    with pytest.raises(ValueError, match="status"):
        decode(inst, Solution(Status.INFEASIBLE), case, scenario)
    with pytest.raises(ValueError, match="values"):
        decode(inst, Solution(Status.OPTIMAL, values=np.zeros(3)), case, scenario)
    x = solve_milp(inst).values.copy()
    x[inst.index[VarRef(VarKind.MU, "3", 1)]] = 0.5
    with pytest.raises(ValueError, match="not integral"):
        decode(inst, Solution(Status.OPTIMAL, values=x), case, scenario)


@pytest.mark.parametrize("seed", [101, 103, 106, 111])
def test_cuts_and_heuristic_do_not_change_optimum(seed):
    case, scenario = random_instance(seed)
    plain = solve(case, scenario, cuts=False, heuristic=False).solution
    full = solve(case, scenario).solution
    assert plain.status is full.status is Status.OPTIMAL
    assert full.objective == pytest.approx(plain.objective, rel=1e-6, abs=1e-6)


def test_angle_mode_never_beats_transport(ieee9):
    from gridrestore.check import check_plan

    res = solve(*ieee9, angle_mode=True)
    assert res.solution.status is Status.OPTIMAL
    # angle coupling only restricts flows
    assert res.solution.objective >= 279 - 1e-6
    assert check_plan(res.plan, *ieee9) == []
