"""Generate the synthetic 113-bus case shipped in src/gridrestore/data.

The 113-bus system of the restoration study is not public. This script
builds a stand-in with the same counts (29 generators of which 10 NBS, 69
load buses, 149 lines) on a random planar layout: a Euclidean minimum
spanning tree plus the shortest remaining edges. Everything is derived from
a fixed seed, so rerunning the script reproduces the committed files.

    python scripts/make_case113.py
"""

from __future__ import annotations

import json
from pathlib import Path

import networkx as nx
import numpy as np

from gridrestore.fsutil import atomic_write
from gridrestore.grid import Bus, DamageScenario, Generator, GenKind, GridCase, Line, validate
from gridrestore.io import case_to_dict, scenario_to_dict

SEED = 113
N_BUS, N_LINE, N_GEN, N_NBS, N_LOAD = 113, 149, 29, 10, 69
DATA = Path(__file__).resolve().parents[1] / "src" / "gridrestore" / "data"


def build_case(seed: int = SEED) -> GridCase:
    rng = np.random.default_rng(seed)
    pos = rng.random((N_BUS, 2))
    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)

    full = nx.Graph()
    for i in range(N_BUS):
        for j in range(i + 1, N_BUS):
            full.add_edge(i, j, weight=float(dist[i, j]))
    tree = nx.minimum_spanning_tree(full)
    edges = sorted(tuple(sorted(e)) for e in tree.edges)
    spare = sorted(
        ((dist[i, j], i, j) for i, j in full.edges if not tree.has_edge(i, j)),
    )
    edges += [(i, j) for _, i, j in spare[: N_LINE - len(edges)]]

    order = rng.permutation(N_BUS)
    gen_buses = sorted(int(b) for b in order[:N_GEN])
    nbs_buses = set(int(b) for b in rng.choice(gen_buses, N_NBS, replace=False))
    others = [int(b) for b in order[N_GEN:]]
    load_buses = set(others[:N_LOAD])

    buses = []
    for b in range(N_BUS):
        demand = float(rng.integers(2, 16) * 10) if b in load_buses else 0.0
        buses.append(Bus(str(b + 1), demand))

    total = sum(b.demand for b in buses)
    gens = []
    for b in gen_buses:
        kind = GenKind.NBS if b in nbs_buses else GenKind.BS
        p_max = float(rng.integers(10, 41) * 10)
        gens.append(Generator(f"G{b + 1}", str(b + 1), kind, 0.0, p_max))
    # black-start capacity alone should not cover the system
    bs_cap = sum(g.p_max for g in gens if g.kind is GenKind.BS)
    assert bs_cap < total < sum(g.p_max for g in gens), (bs_cap, total)

    lines = []
    for k, (i, j) in enumerate(sorted(edges)):
        rating = float(rng.integers(3, 9) * 50)
        x = round(0.01 + 0.1 * float(dist[i, j]), 4)
        lines.append(Line(f"L{k + 1}", str(i + 1), str(j + 1), -rating, rating, x))

    case = GridCase("synthetic113", tuple(buses), tuple(lines), tuple(gens))
    report = validate(case)
    assert report.ok, report.messages()
    return case


def main() -> None:
    case = build_case()
    doc = case_to_dict(case)
    doc = {
        "name": doc["name"],
        "description": (
            "SYNTHETIC 113-bus system (not a public test case): random planar layout, seed 113, "
            "29 generators (10 NBS), 69 load buses, 149 lines. Generated by scripts/make_case113.py."
        ),
        **{k: v for k, v in doc.items() if k != "name"},
    }
    atomic_write(DATA / "synthetic113.json", json.dumps(doc, indent=2) + "\n")
    scenario = DamageScenario(frozenset(ln.id for ln in case.lines), budget=30, horizon=10)
    sdoc = {"name": "synthetic113-all-damaged", **scenario_to_dict(scenario, "synthetic113.json")}
    sdoc["damaged_lines"] = "all"
    atomic_write(DATA / "synthetic113_scenario.json", json.dumps(sdoc, indent=2) + "\n")
    print(f"wrote {DATA / 'synthetic113.json'} and its scenario")


if __name__ == "__main__":
    main()
