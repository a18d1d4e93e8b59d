import dataclasses

import pytest

from gridrestore.grid import DamageScenario, Generator, GenKind
from gridrestore.oracle import (
    CertResult,
    ScheduleAtom,
    SizeGuard,
    SizeGuardError,
    atoms,
    chain3,
    cross_check,
    enumerate_optimal,
    random_instance,
)
from gridrestore.restore import solve


def test_atom_count_chain():
    case, scenario = chain3(1)
    # (4 * 4 repair pairs minus 3 that put both lines in one step) * 4 energization choices
    assert sum(1 for _ in atoms(case, scenario)) == 13 * 4
    case, scenario = chain3(2)
    assert sum(1 for _ in atoms(case, scenario)) == 16 * 4


def test_atoms_respect_budget():
    case, scenario = chain3(1)
    for atom in atoms(case, scenario):
        for t in scenario.steps:
            assert len(atom.repaired_at(t)) <= 1


def test_chain_budget_one():
    obj, atom = enumerate_optimal(*chain3(1))
    # unenergized NBS bus adds its 10 MW cranking power to the unserved load at step 1
    assert obj == pytest.approx(10.0)
    assert dict(atom.repair_step) == {"L1": 1, "L2": 2}
    assert dict(atom.energization_step) == {"3": 2}


def test_chain_budget_two():
    obj, atom = enumerate_optimal(*chain3(2))
    assert obj == pytest.approx(0.0, abs=1e-9)
    assert dict(atom.repair_step) == {"L1": 1, "L2": 1}
    assert dict(atom.energization_step) == {"3": 1}


def test_chain_short_horizon_cannot_serve_at_step_one():
    obj, _ = enumerate_optimal(*chain3(1, horizon=1))
    # one repair only: L1 serves the load, the NBS stays dark
    assert obj == pytest.approx(10.0)


def test_size_guard():
    case, scenario = chain3(1)
    with pytest.raises(SizeGuardError, match="horizon 5 > 4"):
        enumerate_optimal(case, dataclasses.replace(scenario, horizon=5))
    with pytest.raises(SizeGuardError, match="damaged lines"):
        SizeGuard(max_damaged=1).check(case, scenario)
    many = dataclasses.replace(case, generators=case.generators + (
        Generator("G2", "2", GenKind.NBS, 0, 50), Generator("G1b", "1", GenKind.NBS, 0, 50)))
    with pytest.raises(SizeGuardError, match="NBS units"):
        SizeGuard().check(many, scenario)


def test_invalid_inputs_rejected():
    case, _ = chain3(1)
    with pytest.raises(ValueError, match="not part of the case"):
        enumerate_optimal(case, DamageScenario({"nope"}, 1, 2))


def test_random_instances_reproducible():
    assert random_instance(105) == random_instance(105)
    assert random_instance(105) != random_instance(106)
    for seed in range(101, 113):
        case, scenario = random_instance(seed)
        SizeGuard().check(case, scenario)
        assert 4 <= len(case.buses) <= 5


@pytest.mark.parametrize("fixture", [lambda: chain3(1), lambda: random_instance(103)])
def test_cross_check_certifies(fixture):
    cert = cross_check(*fixture())
    assert cert.certified, cert.report()
    assert cert.report().startswith("CERTIFIED: ")


def test_mismatch_report_shows_both_schedules():
    a = ScheduleAtom({"L1": 1, "L2": None}, {"3": None})
    b = ScheduleAtom({"L1": 1, "L2": 2}, {"3": 2})
    text = CertResult(False, 30.0, 10.0, a, b, "Optimal", "tolerance 1.1e-05").report()
    assert text.splitlines()[0] == "MISMATCH: milp objective 30, oracle objective 10"
    assert "repairs [L1@1] energization [3@None]" in text
    assert "repairs [L1@1, L2@2] energization [3@2]" in text


def test_nothing_to_schedule():
    from gridrestore.grid import Bus, GridCase, Line

    case = GridCase("intact", (Bus("1"), Bus("2", 30.0)), (Line("a", "1", "2", -100, 100),),
                    (Generator("G1", "1", GenKind.BS, 0, 50),))
    obj, atom = enumerate_optimal(case, DamageScenario(set(), 1, 2))
    assert obj == pytest.approx(0.0, abs=1e-12)
    assert dict(atom.repair_step) == {}


def test_island_without_black_start_sheds_everything():
    from gridrestore.grid import Bus, GridCase, Line

    case = GridCase("island", (Bus("1", 20.0), Bus("2")), (Line("a", "1", "2", -100, 100),),
                    (Generator("G2", "2", GenKind.NBS, 0, 100),))
    scenario = DamageScenario({"a"}, 1, 3)
    # demand plus the undelivered cranking power, every step
    expected = 3 * (20.0 + 10.0)
    assert enumerate_optimal(case, scenario)[0] == pytest.approx(expected)
    cert = cross_check(case, scenario)
    assert cert.certified and cert.milp_objective == pytest.approx(expected)


def test_ample_budget_leaves_only_step_one_shortfall():
    case, scenario = chain3(2, horizon=2)
    obj, _ = enumerate_optimal(case, scenario)
    plan = solve(case, scenario).plan
    assert obj == pytest.approx(plan.steps[0].total_unserved, abs=1e-9)
    assert all(s.total_unserved <= 1e-9 for s in plan.steps[1:])


@pytest.mark.parametrize("seed", [102, 107, 110])
def test_longer_horizon_never_lowers_the_total(seed):
    # the first T steps of any (T+1)-step plan form a T-step plan with no larger total
    case, scenario = random_instance(seed)
    short = enumerate_optimal(case, dataclasses.replace(scenario, horizon=2))[0]
    assert enumerate_optimal(case, scenario)[0] >= short - 1e-9


def test_more_budget_never_hurts():
    assert enumerate_optimal(*chain3(2))[0] < enumerate_optimal(*chain3(1))[0]
