"""Command line: ``volterra run <config>`` and ``volterra describe <experiment>``.

Exit codes: 0 all checks passed, 1 a check or precondition failed,
2 unreadable config, invalid spec or unknown experiment.
"""
from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from pathlib import Path

from . import backend
from .config import EXPERIMENTS, ConfigError, ExperimentConfig, load_config
from .experiments import DESCRIPTIONS, PreconditionError, run_suite

OUTPUT_ENV = "VOLTERRA_OUTPUT_DIR"
EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


def output_dir(cfg: ExperimentConfig, config_path: Path) -> Path:
    """``$VOLTERRA_OUTPUT_DIR``, else ``[run] output`` (relative to the config), else ``./runs``."""
    env = os.environ.get(OUTPUT_ENV)
    if env:
        base = Path(env)
    elif cfg.output:
        base = config_path.parent / cfg.output
    else:
        base = Path("runs")
    return base / f"{cfg.name}-{cfg.experiment}"


def _header(cfg: ExperimentConfig) -> list[str]:
    return [
        f"timestamp: {datetime.datetime.now(datetime.timezone.utc).isoformat(timespec='seconds')}",
        f"config: {cfg.name}",
        f"experiment: {cfg.experiment}",
        f"operator: {cfg.operator.label}",
        f"kernel: {cfg.kernel.label()}",
        f"noise trace: {cfg.covariance.trace:.6g}",
        f"grid: T={cfg.horizon:g}, steps={','.join(str(g.steps) for g in cfg.grids())}",
        f"seed: {cfg.seed} ({cfg.seeds} seeds), ensemble: {cfg.ensemble}",
        f"backend: {backend.NAME}",
    ]


def run(config_path, out=None, err=None) -> int:
    out, err = out or sys.stdout, err or sys.stderr
    config_path = Path(config_path)
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE
    target = output_dir(cfg, config_path)
    target.mkdir(parents=True, exist_ok=True)
    report = _header(cfg)
    summary = {"config": cfg.name, "experiment": cfg.experiment, "backend": backend.NAME, "experiments": []}
    try:
        outcomes = run_suite(cfg.experiment, cfg)
    except PreconditionError as exc:
        print(f"error: {exc}", file=err)
        report += ["", "PRECONDITION FAILED", str(exc)]
        summary.update(status="failed", error=str(exc))
        _write(target, report, summary, {})
        return EXIT_FAILED
    tables = {}
    for o in outcomes:
        report += ["", f"== {o.experiment} =="] + o.text + ["", "checks:"]
        report += [f"  [{'PASS' if c.passed else 'FAIL'}] {c.name}" + (f" ({c.detail})" if c.detail else "") for c in o.checks]
        summary["experiments"].append(
            {"name": o.experiment, "passed": o.passed, "checks": [c.as_dict() for c in o.checks], "data": o.data}
        )
        prefix = f"{o.experiment}_" if len(outcomes) > 1 else ""
        tables.update({prefix + name: text for name, text in o.tables.items()})
    passed = all(o.passed for o in outcomes)
    summary["status"] = "passed" if passed else "failed"
    _write(target, report, summary, tables)
    for o in outcomes:
        for c in o.checks:
            print(f"{'PASS' if c.passed else 'FAIL'}  {o.experiment}: {c.name}" + (f" ({c.detail})" if c.detail else ""), file=out)
    print(f"outputs written to {target}", file=out)
    return EXIT_OK if passed else EXIT_FAILED


def _write(target: Path, report: list, summary: dict, tables: dict):
    for name, text in tables.items():
        (target / name).write_text(text)
    (target / "report.txt").write_text("\n".join(report) + "\n")
    (target / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def describe(name: str, out=None, err=None) -> int:
    out, err = out or sys.stdout, err or sys.stderr
    if name not in DESCRIPTIONS:
        print(f"error: unknown experiment {name!r}; choose one of {', '.join(EXPERIMENTS)}", file=err)
        return EXIT_USAGE
    print(f"{name}\n\n{DESCRIPTIONS[name]}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="volterra", description="Stochastic Volterra equation experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the experiment selected in a config file")
    p_run.add_argument("config", help="INI config file (see configs/minimal.ini)")
    p_desc = sub.add_parser("describe", help="explain what an experiment checks")
    p_desc.add_argument("experiment", help=" | ".join(EXPERIMENTS))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return run(args.config)
    return describe(args.experiment)


if __name__ == "__main__":
    sys.exit(main())
