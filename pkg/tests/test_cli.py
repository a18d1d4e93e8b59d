import json

import pytest

from gridrestore.cli import EXIT_INPUT, EXIT_OK, EXIT_SOLVE, run
from gridrestore.io import read_trajectory, write_case, write_scenario
from gridrestore.oracle import chain3

from conftest import DATA, GOLDEN

SCEN9 = str(DATA / "ieee9_scenario.json")


@pytest.fixture
def chain_files(tmp_path):
    case, scenario = chain3(1)
    write_case(case, tmp_path / "chain.json")
    write_scenario(scenario, tmp_path / "chain_scenario.json", "chain.json")
    return tmp_path / "chain_scenario.json"


def test_solve_writes_outputs(tmp_path, capsys):
    out = tmp_path / "out" / "nested"
    assert run(["--scenario", SCEN9, "--out", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert text.startswith("case ieee9: status Optimal, objective 279 MW-steps, gap 0, nodes ")
    assert "final unserved load: 0 MW" in text
    assert (out / "trajectory.csv").read_bytes() == (GOLDEN / "ieee9_trajectory.csv").read_bytes()
    plan = json.loads((out / "plan.json").read_text())
    assert plan["objective_MW_steps"] == 279
    assert plan["status"] == "Optimal"
    assert set(plan["energization_step"]) == {"2", "3"}
    assert len(read_trajectory(out / "trajectory.csv")) == 4


def test_explicit_case_path(tmp_path, chain_files, capsys):
    code = run(["--scenario", str(chain_files), "--case", str(chain_files.parent / "chain.json"),
                "--out", str(tmp_path / "o")])
    assert code == EXIT_OK
    assert "objective 10 MW-steps" in capsys.readouterr().out


def test_node_limit_exit_code(tmp_path, capsys):
    assert run(["--scenario", SCEN9, "--out", str(tmp_path), "--nodes", "1"]) in (EXIT_OK, EXIT_SOLVE)
    assert (tmp_path / "plan.json").exists()


def test_export_lp(tmp_path, capsys):
    assert run(["--scenario", SCEN9, "--out", str(tmp_path), "--mode", "export-lp"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == f"wrote {tmp_path / 'model.lp'}"
    assert (tmp_path / "model.lp").read_text().startswith("\\ ieee9\nMinimize\n")


def test_verify_certifies(tmp_path, chain_files, capsys):
    assert run(["--scenario", str(chain_files), "--out", str(tmp_path), "--mode", "verify"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("CERTIFIED: milp objective 10, oracle objective 10")


def test_verify_refuses_large_instances(tmp_path, capsys):
    assert run(["--scenario", SCEN9, "--out", str(tmp_path), "--mode", "verify"]) == EXIT_INPUT
    assert "size guard" in capsys.readouterr().err


@pytest.mark.parametrize(
    "extra, fragment",
    [
        (["--nodes", "0"], "--nodes"),
        (["--gap", "-1"], "--gap"),
    ],
)
def test_bad_limits(tmp_path, capsys, extra, fragment):
    assert run(["--scenario", SCEN9, "--out", str(tmp_path), *extra]) == EXIT_INPUT
    assert fragment in capsys.readouterr().err


def test_missing_scenario(tmp_path, capsys):
    assert run(["--scenario", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == EXIT_INPUT
    assert "cannot read" in capsys.readouterr().err


def test_scenario_without_case(tmp_path, capsys):
    (tmp_path / "s.json").write_text('{"damaged_lines": ["L1"], "budget": 1}')
    assert run(["--scenario", str(tmp_path / "s.json"), "--out", str(tmp_path)]) == EXIT_INPUT
    assert "no --case" in capsys.readouterr().err


def test_angle_mode_without_reactances(tmp_path, chain_files, capsys):
    # chain fixture has no reactances
    assert run(["--scenario", str(chain_files), "--out", str(tmp_path), "--angle-mode"]) == EXIT_INPUT
    assert "reactance" in capsys.readouterr().err


@pytest.mark.parametrize("name, demand", [("ieee9", 315.0), ("ieee39", 6097.1)])
def test_golden_served_load_nondecreasing(name, demand):
    rows = read_trajectory(GOLDEN / f"{name}_trajectory.csv")
    served = [demand - r["total_unserved_MW"] for r in rows]
    assert all(b >= a - 1e-9 for a, b in zip(served, served[1:]))
    assert served[-1] == pytest.approx(demand)


def test_golden_39bus_first_step_serves_about_half():
    first = read_trajectory(GOLDEN / "ieee39_trajectory.csv")[0]
    assert 0.35 <= 1 - first["total_unserved_MW"] / 6097.1 <= 0.65
