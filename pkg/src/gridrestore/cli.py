"""Command-line front end.

Exit codes: 0 success, 1 input error, 2 infeasible or a solver limit hit
before optimality (verify mode: 2 when the certificate fails).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .grid import GridCase
from .io import FormatError, fmt, load_case, load_scenario, scenario_case_path, write_plan, write_trajectory
from .model import RestorationPlan
from .oracle import SizeGuardError, cross_check
from .restore import solve
from .solver.lpformat import export_lp
from .solver.result import GAP_TOL, Limits, Status

EXIT_OK, EXIT_INPUT, EXIT_SOLVE = 0, 1, 2

log = logging.getLogger("gridrestore")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gridrestore", description="Minimum-unserved-load restoration schedules.")
    p.add_argument("--scenario", required=True, type=Path, help="damage scenario JSON")
    p.add_argument("--case", type=Path, help="grid case JSON (default: the case named in the scenario)")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory (created if missing)")
    p.add_argument("--mode", choices=("solve", "verify", "export-lp"), default="solve")
    p.add_argument("--gap", type=float, default=GAP_TOL, help="relative optimality gap (default %(default)g)")
    p.add_argument("--nodes", type=int, help="branch-and-bound node limit")
    p.add_argument("--time-limit", type=float, help="wall-clock seconds; results then depend on machine speed")
    p.add_argument("--angle-mode", action="store_true", help="add DC angle constraints (needs line reactances)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _load(args) -> tuple[GridCase, object]:
    case_path = args.case or scenario_case_path(args.scenario)
    if case_path is None:
        raise FormatError(f"{args.scenario}: no --case given and the scenario names no case")
    case = load_case(case_path)
    return case, load_scenario(args.scenario, case)


def summary(plan: RestorationPlan, nodes: int) -> str:
    gap = "n/a" if plan.gap == float("inf") else f"{plan.gap:.3g}"
    out = [
        f"case {plan.case_name}: status {plan.status}, objective {fmt(plan.objective)} MW-steps, "
        f"gap {gap}, nodes {nodes}"
    ]
    for s in plan.steps:
        rep = ", ".join(s.repaired) or "-"
        en = ", ".join(s.energized) or "-"
        out.append(
            f"step {s.step}: repaired {rep}; energized {en}; "
            f"unserved {fmt(s.total_unserved)} of {fmt(s.total_demand)} MW"
        )
    en = ", ".join(f"bus {b} at step {t}" if t else f"bus {b} never" for b, t in plan.energization_step.items())
    out.append(f"NBS energization: {en or 'no NBS units'}")
    out.append(f"final unserved load: {fmt(plan.steps[-1].total_unserved) if plan.steps else '0'} MW")
    return "\n".join(out)


def run(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.gap < 0 or (args.nodes is not None and args.nodes < 1):
            raise FormatError("--gap must be >= 0 and --nodes >= 1")
        case, scenario = _load(args)
        args.out.mkdir(parents=True, exist_ok=True)
    except (FormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    if args.mode == "export-lp":
        from .model import build

        try:
            target = args.out / "model.lp"
            export_lp(build(case, scenario, angle_mode=args.angle_mode), target)
        except (ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        print(f"wrote {target}")
        return EXIT_OK

    if args.mode == "verify":
        try:
            cert = cross_check(case, scenario)
        except SizeGuardError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        print(cert.report())
        return EXIT_OK if cert.certified else EXIT_SOLVE

    limits = Limits(gap=args.gap, nodes=args.nodes, time=args.time_limit)
    try:
        result = solve(case, scenario, limits, angle_mode=args.angle_mode)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    sol = result.solution
    if result.plan is None:
        print(f"no solution: status {sol.status.value}", file=sys.stderr)
        return EXIT_SOLVE
    try:
        write_plan(result.plan, args.out / "plan.json")
        write_trajectory(result.plan, args.out / "trajectory.csv")
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(summary(result.plan, sol.nodes))
    return EXIT_OK if sol.status is Status.OPTIMAL else EXIT_SOLVE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
