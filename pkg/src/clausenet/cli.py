"""Command line front end.

    clausenet solve f.cnf [--topology mesh|flatbfly] [--stats s.json] [--trace t.csv] ...
    clausenet characterize f.cnf [--percentiles 0.5 0.9 ...]
    clausenet compare --corpus dir/

``solve`` follows the DIMACS solver convention: an ``s`` line, a ``v``
model line when satisfiable, exit status 10 (SAT), 20 (UNSAT) or 0.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .cnf import DEFAULT_PERCENTILES, DimacsError, characterize, parse_dimacs, to_dimacs
from .noc.topology import FLATTENED_BUTTERFLY, MESH
from .sim import SimConfig, SimulationError, compare_topologies, run

EXIT_CODES = {"SAT": 10, "UNSAT": 20, "UNKNOWN": 0}
STATUS_LINE = {"SAT": "s SATISFIABLE", "UNSAT": "s UNSATISFIABLE", "UNKNOWN": "s UNKNOWN"}


def _load(path: str):
    try:
        return parse_dimacs(Path(path).read_bytes())
    except OSError as e:
        raise SystemExit(f"c error: {e}")
    except DimacsError as e:
        raise SystemExit(f"c error: {path}: {e}")


def _sim_args(p: argparse.ArgumentParser):
    p.add_argument("--topology", choices=(MESH, FLATTENED_BUTTERFLY), default=MESH)
    p.add_argument("--grid", type=int, default=4, help="routers per side")
    p.add_argument("--bank-size", type=int, default=1024, help="clause units per bank")
    p.add_argument("--width", type=int, default=8, help="literals per clause unit")
    p.add_argument("--contexts", type=int, choices=(1, 2), default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-conflicts", type=int, default=10000)


def _config(a, **extra) -> SimConfig:
    return SimConfig(topology=a.topology, grid=a.grid, bank_size=a.bank_size, width=a.width,
                     contexts=a.contexts, seed=a.seed, max_conflicts=a.max_conflicts, **extra)


def cmd_solve(a) -> int:
    f = _load(a.file)
    try:
        stats, sim = run(_config(a, trace=a.trace is not None), f)
    except (SimulationError, ValueError) as e:
        print(f"c error: {e}", file=sys.stderr)
        return 1
    print(f"c cycles {stats.cycles} decisions {stats.decisions} conflicts {stats.conflicts}")
    for d in stats.diagnostics:
        print(f"c {d}")
    print(STATUS_LINE[stats.verdict])
    if stats.verdict == "SAT":
        vals = [to_dimacs(2 * v + (not b)) for v, b in enumerate(stats.model)]
        print("v " + " ".join(map(str, vals)) + " 0")
    if a.stats:
        Path(a.stats).write_text(stats.to_json() + "\n")
    if a.trace:
        Path(a.trace).write_text(sim.trace_csv())
    return EXIT_CODES[stats.verdict]


def cmd_characterize(a) -> int:
    f = _load(a.file)
    if not f.clauses:
        print("c error: formula has no clauses", file=sys.stderr)
        return 1
    try:
        cs = characterize(f, a.percentiles)
    except ValueError as e:
        print(f"c error: {e}", file=sys.stderr)
        return 1
    print(cs.to_csv() if a.csv else cs.table(), end="" if a.csv else "\n")
    return 0


def cmd_compare(a) -> int:
    files = sorted(Path(a.corpus).glob("*.cnf"))
    if not files:
        print(f"c error: no .cnf files in {a.corpus}", file=sys.stderr)
        return 1
    formulas = [(p.name, _load(str(p))) for p in files]
    res = compare_topologies(_config(a), formulas)
    topos = list(res["geomean"])
    print("instance," + ",".join(f"{t}_cycles" for t in topos))
    for r in res["rows"]:
        print(r["instance"] + "," + ",".join(str(r["cycles"][t]) for t in topos))
    print("geomean," + ",".join(f"{res['geomean'][t]:.4f}" for t in topos))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clausenet", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="simulate the accelerator on a DIMACS file")
    s.add_argument("file")
    _sim_args(s)
    s.add_argument("--stats", metavar="OUT.json", help="write run statistics as JSON")
    s.add_argument("--trace", metavar="OUT.csv", help="write the per-message trace as CSV")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("characterize", help="clause length and variable popularity percentiles")
    c.add_argument("file")
    c.add_argument("--percentiles", type=float, nargs="+", default=list(DEFAULT_PERCENTILES))
    c.add_argument("--csv", action="store_true")
    c.set_defaults(func=cmd_characterize)

    m = sub.add_parser("compare", help="mesh vs flattened butterfly cycle counts on a corpus")
    m.add_argument("--corpus", required=True, metavar="DIR")
    _sim_args(m)
    m.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    return a.func(a)


if __name__ == "__main__":
    sys.exit(main())
