"""Command-line runner: ``matconc {bound,verify,enumerate,properties,suite}``.

Exit status is 0 when there are no violations and no errors, 1 when some
verdict is a violation and 2 on any error (errors take precedence).

The default master seed is read from ``$MATCONC_SEED`` when a config has no
``seed`` and ``--seed`` is not given.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from importlib import resources
from pathlib import Path

from . import __version__
from .config import ExperimentConfig, load_config
from .errors import MatconcError
from .properties import ALL_PROPERTIES, property_run
from .report import build_report, overall_status, to_csv, to_json
from .scenarios import run_scenario

__all__ = ["main", "run_config", "run_suite"]

EXIT_OK, EXIT_VIOLATION, EXIT_ERROR = 0, 1, 2


def shipped_config_dir() -> Path:
    return Path(str(resources.files("matconc") / "configs"))


def apply_overrides(cfg: ExperimentConfig, seed=None, trials=None, ci_level=None) -> ExperimentConfig:
    changes = {k: v for k, v in {"seed": seed, "trials": trials, "ci_level": ci_level}.items() if v is not None}
    cfg = dataclasses.replace(cfg, **changes)
    cfg.validate_basic()
    return cfg


def run_config(cfg: ExperimentConfig, mode: str = "verify", workers: int = 1) -> dict:
    """Run one config and return its report dict."""
    start = time.perf_counter()
    outcome = run_scenario(cfg, mode, workers)
    return build_report(cfg, outcome, time.perf_counter() - start)


def run_suite(directory: Path, mode: str = "verify", workers: int = 1, **overrides) -> dict:
    """Run every ``*.toml`` under ``directory``; per-file errors are collected."""
    reports, errors = [], []
    for path in sorted(Path(directory).glob("*.toml")):
        try:
            cfg = apply_overrides(load_config(path), **overrides)
            reports.append(run_config(cfg, mode, workers))
        except (MatconcError, ValueError, ArithmeticError, OSError) as exc:
            errors.append({"file": path.name, "error": f"{type(exc).__name__}: {exc}"})
    counts = {s: 0 for s in ("pass", "tight", "violation", "bound_only")}
    for r in reports:
        counts[r["status"]] += 1
    return {
        "library_version": __version__,
        "directory": str(directory),
        "counts": counts,
        "errors": errors,
        "reports": reports,
    }


def _exit_code(statuses, errors) -> int:
    if errors:
        return EXIT_ERROR
    return EXIT_VIOLATION if overall_status(statuses) == "violation" else EXIT_OK


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="master seed (overrides config and $MATCONC_SEED)")
    common.add_argument("--trials", type=int, help="Monte Carlo trials (overrides config)")
    common.add_argument("--ci-level", type=float, help="confidence level of the binomial interval")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--workers", type=int, default=1, help="worker processes for Monte Carlo trials")

    parser = argparse.ArgumentParser(prog="matconc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("bound", "evaluate the bound formula only"),
        ("verify", "bound plus exact oracle (when small enough) and Monte Carlo"),
        ("enumerate", "bound plus exact oracle only"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("config", help="TOML experiment config")
    p = sub.add_parser("suite", parents=[common], help="verify every config in a directory")
    p.add_argument("directory", nargs="?", help="defaults to the shipped configs")
    p = sub.add_parser("properties", help="randomized checks of the matrix inequalities used in proofs")
    p.add_argument("names", nargs="*", help=f"subset of {ALL_PROPERTIES}")
    p.add_argument("--instances", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.add_argument("--out")
    return parser


def _cmd_properties(args) -> int:
    names = args.names or ALL_PROPERTIES
    try:
        results = [property_run(n, args.instances, args.seed, args.tolerance).to_record() for n in names]
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_ERROR
    _write(json.dumps({"library_version": __version__, "properties": results}, indent=2) + "\n", args.out)
    return EXIT_OK if all(r["passed"] for r in results) else EXIT_VIOLATION


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "properties":
        return _cmd_properties(args)
    overrides = {"seed": args.seed, "trials": args.trials, "ci_level": args.ci_level}
    if args.command == "suite":
        directory = Path(args.directory) if args.directory else shipped_config_dir()
        if not directory.is_dir():
            print(f"error: {directory} is not a directory", file=sys.stderr)
            return EXIT_ERROR
        agg = run_suite(directory, "verify", args.workers, **overrides)
        for e in agg["errors"]:
            print(f"error: {e['file']}: {e['error']}", file=sys.stderr)
        _write(to_csv(agg["reports"]) if args.format == "csv" else to_json(agg), args.out)
        return _exit_code([r["status"] for r in agg["reports"]], agg["errors"])
    try:
        cfg = apply_overrides(load_config(args.config), **overrides)
        report = run_config(cfg, args.command, args.workers)
    except (MatconcError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    _write(to_csv([report]) if args.format == "csv" else to_json(report), args.out or cfg.output)
    return _exit_code([report["status"]], [])


if __name__ == "__main__":
    sys.exit(main())
