"""Command-line entry point: ``dgvf run | validate | list-presets | report``.

Exit status: 0 success (and every claim passed), 2 some claim failed,
1 configuration or runtime error.
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .analysis import Tolerances, verify_platoon
from .config import ScenarioConfig, load_config
from .errors import DGVFError
from .logio import read_log, write_log, write_report
from .presets import get_preset, preset_table
from .sim import run, validate_config

EXIT_OK, EXIT_ERROR, EXIT_CLAIMS = 0, 1, 2
OUTPUT_ENV = "DGVF_OUTPUT_DIR"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # malformed flags are configuration errors, not claim failures
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dgvf", description="Spontaneous-ordering platoon simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a scenario and verify the platoon claims")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path, action="append", help="scenario TOML file (repeatable)")
    src.add_argument("--preset", action="append", help="preset name (repeatable)")
    r.add_argument("--seed", type=int, action="append", help="random seed (repeatable: one run per seed)")
    r.add_argument("--out", type=Path, help="output directory")
    r.add_argument("--dt", type=float)
    r.add_argument("--duration", type=float)
    r.add_argument("--method", choices=("rk4", "euler", "bdf", "radau", "lsoda"))
    r.add_argument("--format", choices=("csv", "jsonl"))
    r.add_argument("--compress", action="store_true", help="gzip the logs")
    r.add_argument("--sweep", action="store_true", help="run all requested scenarios in parallel")
    r.add_argument("--workers", type=int, default=None, help="worker processes for --sweep")

    v = sub.add_parser("validate", help="check conditions C1-C5 without running")
    vsrc = v.add_mutually_exclusive_group(required=True)
    vsrc.add_argument("--config", type=Path)
    vsrc.add_argument("--preset")

    sub.add_parser("list-presets", help="list built-in scenarios")

    rep = sub.add_parser("report", help="re-run the analysis on an existing log")
    rep.add_argument("--log", type=Path, required=True, help="trajectory log file or run directory")
    return p


def _apply_overrides(cfg: ScenarioConfig, args, seed) -> ScenarioConfig:
    it = cfg.integration
    changes = {}
    if seed is not None:
        changes["seed"] = seed
    if args.dt is not None:
        changes["dt"] = args.dt
        if it.control_period and it.control_period < args.dt:
            changes["control_period"] = args.dt
    if args.duration is not None:
        changes["duration"] = args.duration
    if args.method is not None:
        changes["method"] = args.method
    out = cfg.output
    out_changes = {}
    if args.format is not None:
        out_changes["format"] = args.format
    if args.compress:
        out_changes["compress"] = True
    return cfg.replace(
        integration=dataclasses.replace(it, **changes),
        output=dataclasses.replace(out, **out_changes),
    )


def _jobs(args):
    if args.preset:
        bases = [get_preset(name) for name in args.preset]
    else:
        bases = [load_config(path) for path in args.config]
    seeds = args.seed or [None]
    jobs = []
    for cfg in bases:
        for seed in seeds:
            cfg2 = _apply_overrides(cfg, args, seed)
            label = cfg2.name if len(seeds) == 1 else f"{cfg2.name}-seed{cfg2.integration.seed}"
            jobs.append((label, cfg2))
    return jobs


def _default_root() -> Path:
    stamp = _dt.datetime.now().strftime("%Y%m%d-%H%M%S")
    return Path(os.environ.get(OUTPUT_ENV, "runs")) / stamp


def execute(cfg: ScenarioConfig, directory: Path) -> dict:
    """Validate, run, log and verify one scenario; returns a small result record."""
    checks = validate_config(cfg)
    log = run(cfg)
    write_log(log, directory, cfg.output.format, cfg.output.compress, config=cfg.to_dict())
    report = verify_platoon(log, Tolerances(**vars(cfg.analysis)))
    write_report(report, directory, checks)
    return {
        "name": cfg.name,
        "dir": str(directory),
        "passed": report.passed,
        "negative": cfg.negative,
        "summary": report.summary(),
        "checks": [c.line() for c in checks if c.status != "pass"],
        "warnings": log.meta["warnings"],
        "runtime": log.meta["runtime_s"],
    }


def _execute_job(job):
    label, cfg, directory = job
    return execute(cfg, directory)


def _cmd_run(args) -> int:
    jobs = _jobs(args)
    if args.out is not None:
        root = args.out
    elif jobs[0][1].output.dir:
        root = Path(jobs[0][1].output.dir)
    else:
        root = _default_root()
    single = len(jobs) == 1
    work = [(label, cfg, root if single else root / label) for label, cfg in jobs]
    if args.sweep and not single:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_execute_job, work))
    else:
        results = [_execute_job(job) for job in work]
    status = EXIT_OK
    for res in results:
        print(f"== {res['name']} -> {res['dir']} ({res['runtime']:.1f} s)")
        for line in res["checks"]:
            print("  " + line)
        for w in res["warnings"]:
            print("  warning: " + w)
        print(res["summary"])
        if not res["passed"]:
            status = EXIT_CLAIMS
    return status


def _cmd_validate(args) -> int:
    cfg = get_preset(args.preset) if args.preset else load_config(args.config)
    checks = validate_config(cfg)
    for c in checks:
        print(c.line())
    return EXIT_ERROR if any(c.blocking for c in checks) else EXIT_OK


def _cmd_list(args) -> int:
    rows = preset_table()
    width = max(len(name) for name, _, _ in rows)
    for name, negative, desc in rows:
        flag = " [negative]" if negative else ""
        print(f"{name:<{width}}  {desc}{flag}")
    return EXIT_OK


def _cmd_report(args) -> int:
    log = read_log(args.log)
    tol = Tolerances(**log.meta["tolerances"]) if "tolerances" in log.meta else Tolerances()
    report = verify_platoon(log, tol)
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_CLAIMS


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handlers = {"run": _cmd_run, "validate": _cmd_validate, "list-presets": _cmd_list, "report": _cmd_report}
    try:
        return handlers[args.command](args)
    except DGVFError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
