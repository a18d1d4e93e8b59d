import numpy as np
import pytest

from gridrestore.model import build
from gridrestore.solver import InstanceBuilder, export_lp, lp_text, solve_lp
from gridrestore.solver.lpformat import unique_names


def test_naming_contract():
    assert unique_names(["B_L7_t2", "a b", "1x", ".y", "a_b", "a-b", ""]) == [
        "B_L7_t2", "a_b", "x_1x", "x_.y", "a_b~2", "a_b~3", "_",
    ]


def test_small_instance_text():
    ib = InstanceBuilder("demo")
    x = ib.add_column("x", 0, 1, binary=True, cost=-60)
    y = ib.add_column("y", -np.inf, np.inf, cost=1.5)
    z = ib.add_column("z", 2, 2)
    w = ib.add_column("w", -np.inf, 4)
    ib.add_row([(x, 10), (y, -1)], "<=", 50, "cap")
    ib.add_row([(z, 1), (w, 1)], ">=", -3)
    ib.add_row([(y, 1)], "=", 0.25, "pin")
    assert lp_text(ib.build()) == (
        "\\ demo\n"
        "Minimize\n"
        " obj: - 60 x + 1.5 y\n"
        "Subject To\n"
        " cap: 10 x - y <= 50\n"
        " r1: z + w >= -3\n"
        " pin: y = 0.25\n"
        "Bounds\n"
        " 0 <= x <= 1\n"
        " y free\n"
        " z = 2\n"
        " -inf <= w <= 4\n"
        "Binaries\n"
        " x\n"
        "End\n"
    )


def test_long_rows_wrap(ieee9):
    text = lp_text(build(*ieee9))
    assert max(len(line) for line in text.splitlines()) <= 200 + 40


def test_export_is_deterministic(tmp_path, ieee9):
    inst = build(*ieee9)
    export_lp(inst, tmp_path / "a.lp")
    export_lp(build(*ieee9), tmp_path / "b.lp")
    a = (tmp_path / "a.lp").read_bytes()
    assert a == (tmp_path / "b.lp").read_bytes()
    text = a.decode()
    assert " balance_5_t1: LS_5_t1 " in text
    binaries = text.split("Binaries\n")[1].split("End")[0].split()
    assert len(binaries) == 72


def test_round_trip_through_highs(tmp_path, ieee9):
    highspy = pytest.importorskip("highspy")
    inst = build(*ieee9)
    export_lp(inst.relaxed(), tmp_path / "relax.lp")
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.readModel(str(tmp_path / "relax.lp"))
    h.run()
    ours = solve_lp(inst)
    assert h.getInfo().objective_function_value == pytest.approx(ours.objective, rel=1e-9)
    assert h.getNumCol() == inst.n_cols and h.getNumRow() == inst.n_rows


def test_one_variable_document():
    ib = InstanceBuilder("one")
    ib.add_column("x", 0, 3, cost=2)
    text = lp_text(ib.build())
    body = text.split("Bounds\n")[1].split("End")[0].splitlines()
    assert body == [" 0 <= x <= 3"]
    assert " obj: 2 x\n" in text
