"""Command-line experiment runner.

    centroidkit <experiment> --config cfg.toml [--seed S] [--out DIR] [--jobs J]
    centroidkit all --seed 7
    centroidkit list

Config files are TOML: top-level `seed`, plus one optional table per
experiment with budget overrides, e.g.

    seed = 7
    [rotational-invariance]
    outer = 200
    saa = 20000

Exit codes: 0 all assertions pass, 1 an assertion failed, 2 config/usage
error.  report.json is byte-identical across reruns with the same seed and
config; wall-clock goes to timing.json.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from typing import Optional

try:  # 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from . import experiments, reporting


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="centroidkit",
        description="Seeded experiment suite for centroid-body norm estimation.")
    sub = parser.add_subparsers(dest="command", metavar="<experiment>")
    sub.add_parser("list", help="list available experiments")
    for name in experiments.available() + ["all"]:
        sp = sub.add_parser(name, help=f"run {name}" if name != "all"
                            else "run every experiment")
        sp.add_argument("--config", help="TOML config file")
        sp.add_argument("--seed", type=int, default=None,
                        help="global seed (overrides the config file)")
        sp.add_argument("--out", default="centroidkit-out",
                        help="output directory (default: centroidkit-out)")
        sp.add_argument("--jobs", type=int, default=None,
                        help="worker processes (default: CENTROIDKIT_JOBS or 1)")
    return parser


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _resolve_jobs(arg_jobs: Optional[int]) -> int:
    if arg_jobs is not None:
        return max(1, arg_jobs)
    env = os.environ.get("CENTROIDKIT_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ValueError(f"CENTROIDKIT_JOBS is not an integer: {env!r}") from exc
    return 1


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    if args.command == "list":
        for name in experiments.available():
            print(name)
        return 0
    try:
        cfg = _load_config(args.config)
        jobs = _resolve_jobs(args.jobs)
        seed = args.seed if args.seed is not None else cfg.get("seed")
        if seed is None:
            raise ValueError("a seed is required (--seed or `seed` in the config)")
        names = experiments.available() if args.command == "all" else [args.command]
        overrides = {name: cfg.get(name, {}) for name in names}
        for name, ov in overrides.items():
            if not isinstance(ov, dict):
                raise ValueError(f"config section [{name}] must be a table")
            unknown = set(ov) - set(experiments.default_config(name)) - {"seed"}
            if unknown:
                raise ValueError(
                    f"unknown config keys for {name}: {', '.join(sorted(unknown))}")
    except (OSError, ValueError, tomllib.TOMLDecodeError) as exc:
        print(f"centroidkit: config error: {exc}", file=sys.stderr)
        return 2

    t0 = time.time()
    reports = []
    for name in names:
        reports.append(experiments.run_experiment(
            name, overrides[name], seed=int(seed), jobs=jobs))
    report = reports[0] if len(reports) == 1 else {
        "experiments": reports,
        "passed": all(r["passed"] for r in reports),
    }
    reporting.write_report(report, args.out)
    reporting.write_timing({
        "command": args.command,
        "wall_clock_seconds": time.time() - t0,
        "unix_time": time.time(),
    }, args.out)
    reporting.write_tables(report, args.out)
    reporting.emit_plots(report, args.out)

    for rep in reports:
        status = "PASS" if rep["passed"] else "FAIL"
        print(f"{rep['experiment']}: {status}")
        for verdict, ok in sorted(rep["verdicts"].items()):
            if not ok:
                print(f"  failed: {verdict}")
    print(f"report: {os.path.join(args.out, 'report.json')}")
    return 0 if all(r["passed"] for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
