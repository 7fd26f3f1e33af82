"""Command-line runner: ``lab <experiment> [--config FILE] [--set k=v]... --out DIR``.

Exit codes: 0 pass, 2 fail, 3 inconclusive, 64 usage error, 65 configuration
error.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import experiments, io
from .errors import ConfigurationError, LabError, UsageError

EXIT = {"pass": 0, "fail": 2, "inconclusive": 3}


def version() -> str:
    try:
        return metadata.version("occlab")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def list_experiments() -> str:
    lines = [f"{'experiment':<24} {'anchor':<80} defaults"]
    for name, exp in experiments.REGISTRY.items():
        defaults = " ".join(f"{k}={io.format_value(v)}" for k, v in exp.defaults.items())
        lines.append(f"{name:<24} {exp.anchor:<80} {defaults}")
    return "\n".join(lines)


def resolve_config(name: str, config_path=None, overrides=(), seed=None) -> dict:
    if name not in experiments.REGISTRY:
        raise UsageError(f"unknown experiment {name!r}; try 'lab list'")
    exp = experiments.REGISTRY[name]
    cfg = {}
    if config_path is not None:
        try:
            cfg.update(io.read_config(config_path))
        except OSError as e:
            raise ConfigurationError(f"cannot read config: {e}") from e
    cfg.update(io.parse_overrides(overrides))
    if seed is not None:
        cfg["seed"] = seed
    return exp.config(cfg)


def run_experiment(name: str, cfg: dict, out_dir, threads: int = 1) -> tuple[dict, str]:
    """Run one experiment, write report.json, tables/*.csv and manifest.json.
    Returns (report, status)."""
    exp = experiments.REGISTRY[name]
    out = Path(out_dir)
    (out / "tables").mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    result = exp.run(cfg, threads)
    wall = time.perf_counter() - t0
    table_files, hashes = {}, {}
    for tname, rows in sorted(result.tables.items()):
        rel = f"tables/{tname}.csv"
        hashes[rel] = io.write_table(out / rel, rows)
        table_files[tname] = rel
    seed = cfg["seed"]
    report = {
        "experiment": name,
        "config": cfg,
        "config_text": io.config_text(cfg),
        "config_hash": io.config_hash(cfg),
        "status": result.status,
        "verdicts": [v.record(k, seed) for k, v in result.verdicts.items()],
        "tables": table_files,
        "info": result.info,
        "version": version(),
        "metadata": {"wall_clock_s": wall, "threads": threads,
                     "finished_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())},
    }
    io.write_json(out / "report.json", report)
    (out / "config.txt").write_text(io.config_text(cfg))
    hashes["config.txt"] = hashlib.sha256((out / "config.txt").read_bytes()).hexdigest()
    hashes["report.json"] = hashlib.sha256((out / "report.json").read_bytes()).hexdigest()
    manifest = {
        "inputs": {"experiment": name, "seed": seed, "config_hash": report["config_hash"]},
        "outputs": hashes,
        "versions": {"occlab": version(), "python": platform.python_version(), "numpy": np.__version__,
                     **{p: _pkg_version(p) for p in ("scipy", "numba")}},
    }
    io.write_json(out / "manifest.json", manifest)
    return report, result.status


def _pkg_version(name):
    try:
        return metadata.version(name)
    except metadata.PackageNotFoundError:
        return None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lab", description="Run occupation-measure experiments.")
    p.add_argument("experiment", help="experiment name, or 'list'")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="config override")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.experiment == "list":
            print(list_experiments())
            return 0
        cfg = resolve_config(args.experiment, args.config, args.set, args.seed)
        if args.out is None:
            raise UsageError("--out is required")
        if args.threads < 1:
            raise UsageError("--threads must be positive")
        report, status = run_experiment(args.experiment, cfg, args.out, args.threads)
    except LabError as e:
        print(f"lab: {e}", file=sys.stderr)
        return e.exit_code
    for v in report["verdicts"]:
        print(f"{v['status']:<13} {v['name']:<32} stat={v['statistic']:.6g} thr={v['threshold']:.6g}")
    print(f"{args.experiment}: {status}")
    return EXIT[status]


if __name__ == "__main__":
    sys.exit(main())
