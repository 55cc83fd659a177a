"""Command-line entry point: ``levelset-lab run|presets|check``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from ..errors import ConfigError
from .config import PRESETS, list_presets, parse_config
from .runner import check_manifest, run_experiment

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
THREADS_ENV = "LEVELSET_LAB_THREADS"


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="levelset-lab", description="Paired marker and grid level-set experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a config file or a preset name")
    run.add_argument("config", help="path to a config file, or the name of a preset")
    run.add_argument("--out-dir", default="runs", help="parent directory for run output (default: runs)")
    run.add_argument("--threads", type=int, default=None, help=f"worker threads (fallback: ${THREADS_ENV})")
    run.add_argument("--seed", type=int, default=None, help="overrides the config's seed key")
    run.add_argument("--override", action="append", default=[], metavar="KEY=VALUE", help="repeatable key override")
    sub.add_parser("presets", help="list the preset registry")
    chk = sub.add_parser("check", help="verify a run manifest")
    chk.add_argument("manifest", help="manifest.json or its run directory")
    return p


def _config_text(arg: str) -> str:
    path = Path(arg)
    if path.is_file():
        return path.read_text()
    if arg in PRESETS:
        return f"preset = {arg}\n"
    raise ConfigError(f"{arg!r} is neither a config file nor a preset name")


def _threads(value: int | None) -> int | None:
    if value is not None:
        return value
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return None


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "presets":
        width = max(len(name) for name, _ in list_presets())
        for name, summary in list_presets():
            print(f"{name:<{width}}  {summary}")
        return EXIT_OK
    if args.command == "check":
        try:
            ok, problems = check_manifest(args.manifest)
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        for line in problems:
            print(line)
        print("all checks pass" if ok else "manifest check failed")
        return EXIT_OK if ok else EXIT_CHECK
    try:
        overrides = list(args.override)
        if args.seed is not None:
            overrides.append(f"seed={args.seed}")
        config = parse_config(_config_text(args.config), overrides)
        threads = _threads(args.threads)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    manifest = run_experiment(config, args.out_dir, threads)
    print(f"run {manifest.run_id} -> {manifest.directory}")
    for name, check in manifest.checks.items():
        print(f"  {name:<10} {check.verdict}")
    if manifest.error is not None:
        print("runtime error: " + manifest.error.splitlines()[0], file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK if manifest.passed else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
