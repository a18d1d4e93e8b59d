import json

import pytest

from gridrestore.grid import DamageScenario
from gridrestore.io import (
    FormatError,
    fmt,
    load_case,
    load_scenario,
    read_trajectory,
    scenario_case_path,
    trajectory_csv,
    write_case,
    write_scenario,
)

from conftest import DATA, bundled


def dump(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return p


def test_bundled_9bus_counts(ieee9):
    case, scenario = ieee9
    assert (len(case.buses), len(case.lines), len(case.generators)) == (9, 9, 3)
    assert [g.id for g in case.nbs_generators()] == ["G2", "G3"]
    assert len(scenario.damaged_line_ids) == 9
    assert (scenario.budget, scenario.horizon) == (3, 4)


def test_bundled_39bus_counts(ieee39):
    case, scenario = ieee39
    assert (len(case.buses), len(case.lines), len(case.generators)) == (39, 46, 10)
    assert len(scenario.damaged_line_ids) == 46
    assert (scenario.budget, scenario.horizon) == (10, 6)


def test_synthetic_113bus_counts():
    case, scenario = bundled("synthetic113")
    loads = [b for b in case.buses if b.demand > 0]
    nbs = case.nbs_generators()
    assert (len(case.buses), len(case.lines), len(case.generators)) == (113, 149, 29)
    assert (len(nbs), len(loads)) == (10, 69)
    assert all(case.bus(g.bus).demand == 0 for g in nbs)
    assert (scenario.budget, scenario.horizon) == (30, 10)
    doc = json.loads((DATA / "synthetic113.json").read_text())
    assert "SYNTHETIC" in doc["description"]


def test_missing_horizon_defaults(tmp_path):
    p = dump(tmp_path, "s.json", {"damaged_lines": "all", "budget": 10})
    case, _ = bundled("ieee39")
    assert load_scenario(p, case).horizon == 7


def test_case_round_trip(tmp_path, ieee9):
    case, scenario = ieee9
    write_case(case, tmp_path / "c.json")
    write_scenario(scenario, tmp_path / "s.json", "c.json")
    again = load_case(tmp_path / "c.json")
    assert again == case
    assert load_scenario(tmp_path / "s.json", again) == scenario
    assert scenario_case_path(tmp_path / "s.json") == (tmp_path / "c.json").resolve()


def test_demand_profile_round_trip(tmp_path, ieee9):
    case, _ = ieee9
    s = DamageScenario({"L1"}, 1, 2, {("5", 2): 45.5})
    write_scenario(s, tmp_path / "s.json")
    assert load_scenario(tmp_path / "s.json", case) == s


def test_malformed_json_names_position(tmp_path):
    p = dump(tmp_path, "c.json", '{"name": "x",\n "buses": [}')
    with pytest.raises(FormatError, match=r"line 2 column"):
        load_case(p)


def test_missing_file(tmp_path):
    with pytest.raises(FormatError, match="cannot read"):
        load_case(tmp_path / "nope.json")


def test_schema_errors_name_the_field(tmp_path):
    p = dump(tmp_path, "c.json", {"name": "x", "buses": [{"id": "1", "demand": -3}], "lines": [], "generators": []})
    with pytest.raises(FormatError, match=r"buses\.0\.demand"):
        load_case(p)


def test_unknown_keys_rejected(tmp_path):
    p = dump(tmp_path, "c.json", {"name": "x", "buses": [], "lines": [], "generators": [], "extra": 1})
    with pytest.raises(FormatError, match="extra"):
        load_case(p)


def test_semantic_errors_listed(tmp_path):
    doc = {
        "name": "x",
        "buses": [{"id": "1", "demand": 0}],
        "lines": [{"id": "a", "from_bus": "1", "to_bus": "2", "f_min": -1, "f_max": 1}],
        "generators": [],
    }
    with pytest.raises(FormatError, match="unknown bus"):
        load_case(dump(tmp_path, "c.json", doc))


@pytest.mark.parametrize(
    "doc, fragment",
    [
        ({"damaged_lines": "all", "budget": 0}, "budget"),
        ({"damaged_lines": ["L1"], "budget": 1, "horizon": 0}, "horizon"),
        ({"damaged_lines": ["L1", "L1"], "budget": 1}, "duplicate"),
        ({"damaged_lines": ["L99"], "budget": 1}, "not part of the case"),
        (
            {"damaged_lines": [], "budget": 1, "demand_profile": [{"bus": "5", "step": 1, "demand": 1},
                                                                   {"bus": "5", "step": 1, "demand": 2}]},
            "duplicate entry",
        ),
    ],
)
def test_scenario_errors(tmp_path, ieee9, doc, fragment):
    with pytest.raises(FormatError, match=fragment):
        load_scenario(dump(tmp_path, "s.json", doc), ieee9[0])


def test_all_needs_case(tmp_path):
    with pytest.raises(FormatError, match="needs the case"):
        load_scenario(dump(tmp_path, "s.json", {"damaged_lines": "all", "budget": 1}))


def test_fmt_suppresses_noise():
    assert fmt(1e-12) == "0"
    assert fmt(-3e-10) == "0"
    assert fmt(279.0) == "279"
    assert fmt(1308.4) == "1308.4"


def test_trajectory_round_trip(tmp_path, solved9):
    text = trajectory_csv(solved9.plan)
    (tmp_path / "t.csv").write_text(text)
    rows = read_trajectory(tmp_path / "t.csv")
    assert [r["step"] for r in rows] == [1, 2, 3, 4]
    assert sum(r["lines_repaired"] for r in rows) == 9


def test_trajectory_header_checked(tmp_path):
    (tmp_path / "t.csv").write_text("a,b\n1,2\n")
    with pytest.raises(FormatError, match="header"):
        read_trajectory(tmp_path / "t.csv")
