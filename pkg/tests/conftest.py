from __future__ import annotations

from pathlib import Path

import pytest

from gridrestore.io import load_case, load_scenario
from gridrestore.solver import simplex

DATA = Path(__file__).resolve().parents[1] / "src" / "gridrestore" / "data"
GOLDEN = Path(__file__).resolve().parent / "golden"
DUALITY_TOL = 1e-6


def bundled(name: str):
    case = load_case(DATA / f"{name}.json")
    return case, load_scenario(DATA / f"{name}_scenario.json", case)


@pytest.fixture(scope="session")
def ieee9():
    return bundled("ieee9")


@pytest.fixture(scope="session")
def ieee39():
    return bundled("ieee39")


class LPAudit:
    """Weak-duality residual of every optimal LP solve."""

    def __init__(self) -> None:
        self.count = 0
        self.worst = 0.0

    def record(self, sol) -> None:
        self.count += 1
        self.worst = max(self.worst, sol.duality_residual())


AUDIT = LPAudit()


@pytest.fixture(scope="session", autouse=True)
def _audit_lp_solves():
    # session scope, so solves inside session and module fixtures are seen too
    finish = simplex.LPEngine._finish

    def audited(self, *args):
        sol, basis = finish(self, *args)
        AUDIT.record(sol)
        return sol, basis

    with pytest.MonkeyPatch.context() as mp:
        mp.setattr(simplex.LPEngine, "_finish", audited)
        yield


@pytest.fixture(autouse=True)
def lp_audit():
    yield AUDIT
    assert AUDIT.worst <= DUALITY_TOL, f"weak-duality residual {AUDIT.worst:.3g} (LP solve #{AUDIT.count})"


def pytest_terminal_summary(terminalreporter):
    terminalreporter.write_line(
        f"weak-duality audit: {AUDIT.count} optimal LP solves, worst residual {AUDIT.worst:.3g} (limit {DUALITY_TOL:g})"
    )


@pytest.fixture(scope="session")
def solved9(ieee9):
    from gridrestore.restore import solve

    return solve(*ieee9)
