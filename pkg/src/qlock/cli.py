"""Command line entry point: ``qlock run`` and ``qlock sweep``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .experiments import (
    ConfigError,
    ExperimentConfig,
    InfeasibleError,
    run,
    sweep,
    write_report,
)

log = logging.getLogger("qlock")

EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_RUNTIME = 1


def _error(kind: str, message: str, code: int) -> int:
    json.dump({"error": kind, "message": message, "exit_code": code}, sys.stderr)
    sys.stderr.write("\n")
    return code


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _add_override_flags(parser: argparse.ArgumentParser) -> None:
    """One ``--key value`` flag per config field; values override the file."""
    for f in dataclasses.fields(ExperimentConfig):
        if f.name == "dims":
            parser.add_argument("--dims", nargs=2, type=int, metavar=("D_A", "D_B"))
        elif f.name in ("seed", "output_path"):
            continue
        else:
            kind = {"int": int, "float": float}.get(str(f.type).split(" ")[0], str)
            parser.add_argument(f"--{f.name}", type=kind)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qlock", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment from a JSON config")
    p_run.add_argument("--config", help="path to a JSON config file")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--threads", type=int, help="worker threads (default: $QLOCK_THREADS or 1)")
    p_run.add_argument("--out", help="report path (overrides output_path)")
    _add_override_flags(p_run)

    p_sweep = sub.add_parser("sweep", help="run every config in a directory and tabulate")
    p_sweep.add_argument("--configs", required=True, help="directory of *.json configs")
    p_sweep.add_argument("--out", required=True, help="CSV output path")
    p_sweep.add_argument("--threads", type=int)
    return parser


def _cmd_run(args) -> int:
    data = _load_config(args.config) if args.config else {}
    for f in dataclasses.fields(ExperimentConfig):
        value = getattr(args, f.name, None)
        if value is not None and f.name != "output_path":
            data[f.name] = list(value) if f.name == "dims" else value
    if args.out:
        data["output_path"] = args.out
    cfg = ExperimentConfig.from_dict(data)
    report = run(cfg, threads=args.threads)
    if not cfg.output_path:
        json.dump(report, sys.stdout, indent=2, allow_nan=False)
        sys.stdout.write("\n")
    else:
        log.info("report written to %s", cfg.output_path)
    return 0


def _cmd_sweep(args) -> int:
    directory = Path(args.configs)
    if not directory.is_dir():
        raise ConfigError(f"{directory} is not a directory")
    configs = [_load_config(str(p)) for p in sorted(directory.glob("*.json"))]
    table = sweep(configs, threads=args.threads)
    Path(args.out).write_text(table)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_sweep(args)
    except ConfigError as exc:
        return _error("config_error", str(exc), EXIT_CONFIG)
    except InfeasibleError as exc:
        return _error("infeasible", str(exc), EXIT_INFEASIBLE)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        return _error(type(exc).__name__, str(exc), EXIT_RUNTIME)


__all__ = ["main", "build_parser", "write_report"]

if __name__ == "__main__":
    sys.exit(main())
