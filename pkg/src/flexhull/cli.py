"""Command-line entry points.

Exit codes: 0 = certified result, 2 = finished but not certified
(iteration or time cap), 1 = error.
"""

from __future__ import annotations

import argparse
import sys as _sys

import numpy as np

from .benders import MasterInfeasibleError
from .compact import assemble, dump_matrices
from .ders import UncertaintyModel, load_fleet
from .feeder import enumerate_spanning_trees, load_feeder
from .validate import (ScenarioConfig, VolumeTable, ellipsoid_volume, emit_report,
                       monte_carlo_validate, reference_topology, solve_scenario, sweep)

EXIT_OK, EXIT_ERROR, EXIT_UNCERTIFIED = 0, 1, 2


def _parse_open_lines(text):
    if not text:
        return None
    pairs = []
    for part in text.split(","):
        a, b = part.strip().split("-")
        pairs.append((int(a), int(b)))
    return tuple(pairs)


def _common(parser):
    parser.add_argument("--feeder", required=True, help="feeder JSON file")
    parser.add_argument("--mode", default="fixed", choices=["fixed", "reconfig", "both"])
    parser.add_argument("--delta", default="0.05",
                        help="uncertainty level, or comma list for sweep")
    parser.add_argument("--eps", type=float, default=1e-6,
                        help="separation tolerance")
    parser.add_argument("--gap-tol", type=float, default=1e-4,
                        help="separation relative gap")
    parser.add_argument("--samples", type=int, default=9000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--t-window", type=int, default=None,
                        help="use only the first N periods")
    parser.add_argument("--open-lines", default=None,
                        help="fixed-mode open switches, e.g. '13-118,54-94'")
    parser.add_argument("--time-cap", type=float, default=600.0)
    parser.add_argument("--max-iter", type=int, default=100)


def _config(args, delta=None) -> ScenarioConfig:
    return ScenarioConfig(
        feeder=args.feeder, mode=args.mode,
        delta=float(delta if delta is not None else args.delta.split(",")[0]),
        t_window=args.t_window, eps=args.eps, gap_tol=args.gap_tol,
        samples=args.samples, seed=args.seed, out_dir=args.out,
        open_lines=_parse_open_lines(args.open_lines),
        time_cap=args.time_cap, max_iter=args.max_iter)


def _deltas(args):
    return [float(v) for v in args.delta.split(",")]


def _single_row_table(result, system, config, mode, wall) -> VolumeTable:
    from .validate import VolumeRow

    index, true_vol = ellipsoid_volume(result.ellipsoid.Q)
    open_str = ""
    if result.topology is not None:
        feeder = system.feeder
        sw = feeder.switchable_lines
        open_str = ";".join(
            f"{feeder.lines[sw[i]].from_bus}-{feeder.lines[sw[i]].to_bus}"
            for i, v in enumerate(result.topology.s) if v == 0)
    table = VolumeTable()
    table.rows.append(VolumeRow(
        delta=config.delta, mode=mode, volume_index=index, true_volume=true_vol,
        iterations=result.iterations, certified=result.certified,
        open_lines=open_str, wall=wall, result=result))
    return table


def cmd_solve(args) -> int:
    import time

    config = _config(args)
    mode = "fixed" if args.mode == "both" else args.mode
    t0 = time.perf_counter()
    result, system = solve_scenario(config, mode=mode)
    wall = time.perf_counter() - t0
    index, true_vol = ellipsoid_volume(result.ellipsoid.Q)
    print(f"mode={mode} delta={config.delta} iterations={result.iterations} "
          f"certified={result.certified}")
    print(f"volume_index={index:.6g} true_volume={true_vol:.6g}")
    if result.topology is not None:
        print(f"switch_vector={list(result.topology.s)}")
    print(f"center={np.round(result.ellipsoid.c, 6).tolist()}")
    if args.out:
        table = _single_row_table(result, system, config, mode, wall)
        emit_report(table, args.out, config=config)
        print(f"report written to {args.out}")
    return EXIT_OK if result.certified else EXIT_UNCERTIFIED


def cmd_validate(args) -> int:
    import time

    config = _config(args)
    mode = "fixed" if args.mode == "both" else args.mode
    t0 = time.perf_counter()
    result, system = solve_scenario(config, mode=mode)
    wall = time.perf_counter() - t0
    report = monte_carlo_validate(result, system, config.samples, config.seed)
    print(f"samples={report.samples} infeasible={report.infeasible} "
          f"max_slack={report.max_slack:.3e}")
    print(f"voltage range [{report.v_min:.4f}, {report.v_max:.4f}] p.u.")
    if args.out:
        table = _single_row_table(result, system, config, mode, wall)
        emit_report(table, args.out, config=config, validations={"run": report})
        print(f"report written to {args.out}")
    if not result.certified:
        return EXIT_UNCERTIFIED
    return EXIT_OK if report.all_feasible else EXIT_UNCERTIFIED


def cmd_sweep(args) -> int:
    config = _config(args)
    table = sweep(config, _deltas(args))
    print("delta,mode,volume_index,iterations,certified")
    for r in table.rows:
        print(f"{r.delta:g},{r.mode},{r.volume_index:.6g},{r.iterations},"
              f"{int(r.certified)}{',' + r.error if r.error else ''}")
    if args.out:
        emit_report(table, args.out, config=config)
        print(f"report written to {args.out}")
    if any(r.error for r in table.rows):
        return EXIT_ERROR
    return EXIT_OK if all(r.certified for r in table.rows) else EXIT_UNCERTIFIED


def cmd_enumerate(args) -> int:
    feeder = load_feeder(args.feeder)
    topos = enumerate_spanning_trees(feeder)
    sw = feeder.switchable_lines
    print(f"{len(topos)} radial configurations over {len(sw)} switches")
    for topo in topos:
        opens = [f"{feeder.lines[sw[i]].from_bus}-{feeder.lines[sw[i]].to_bus}"
                 for i, v in enumerate(topo.s) if v == 0]
        print(f"s={list(topo.s)} open=[{', '.join(opens)}]")
    return EXIT_OK


def cmd_dump(args) -> int:
    config = _config(args)
    feeder = load_feeder(args.feeder)
    fleet = load_fleet(args.feeder, feeder)
    u = UncertaintyModel(delta=config.delta)
    mode = "fixed" if args.mode == "both" else args.mode
    if mode == "fixed":
        topo = reference_topology(feeder, config.open_lines)
        system = assemble(feeder, fleet, u, "fixed", topology=topo)
    else:
        system = assemble(feeder, fleet, u, "reconfig")
    out = args.out or "matrices"
    files = dump_matrices(system, out)
    print(f"{len(files)} files written to {out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="flexhull",
        description="Maximum-volume ellipsoidal aggregate-flexibility regions "
                    "for radial feeders, with switch reconfiguration.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, doc in [
            ("solve", cmd_solve, "compute the flexibility region"),
            ("validate", cmd_validate, "solve then audit by Monte-Carlo disaggregation"),
            ("sweep", cmd_sweep, "solve across uncertainty levels"),
            ("enumerate-topologies", cmd_enumerate, "list radial switch configurations"),
            ("dump-matrices", cmd_dump, "write the assembled system matrices")]:
        p = sub.add_parser(name, help=doc)
        _common(p)
        p.set_defaults(fn=fn)
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except MasterInfeasibleError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_ERROR
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=_sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
