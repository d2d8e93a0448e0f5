"""``wavectl run <config> [--out DIR] [--sweep key=v1,v2] [--seed N]``."""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import ConfigError, ExperimentConfig, parse_config
from .experiments import ExperimentError, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _with_overrides(text: str, overrides: dict[str, str]) -> str:
    # appended lines replace earlier settings of the same key
    kept = []
    for line in text.splitlines():
        key = line.split("#", 1)[0].split("=", 1)[0].strip()
        kept.append("" if "=" in line.split("#", 1)[0] and key in overrides else line)
    kept.extend(f"{k} = {v}" for k, v in overrides.items())
    return "\n".join(kept) + "\n"


def _parse_sweep(arg: str) -> tuple[str, list[str]]:
    if "=" not in arg:
        raise ConfigError([f"--sweep: expected key=v1,v2,..., got {arg!r}"])
    key, values = arg.split("=", 1)
    vals = [v.strip() for v in values.split(",") if v.strip()]
    if not vals:
        raise ConfigError([f"--sweep: no values for {key.strip()!r}"])
    return key.strip(), vals


def build_runs(text: str, out: Path, sweep: str | None, seed: int | None) -> list[tuple[ExperimentConfig, Path]]:
    """Validate every configuration up front so nothing runs if any is invalid."""
    base = {} if seed is None else {"seed": str(seed)}
    if sweep is None:
        return [(parse_config(_with_overrides(text, base)), out)]
    key, values = _parse_sweep(sweep)
    runs, errors = [], []
    for v in values:
        try:
            runs.append((parse_config(_with_overrides(text, {**base, key: v})), out / f"{key}={v}"))
        except ConfigError as exc:
            errors.extend(f"{key}={v}: {e}" for e in exc.errors)
    if errors:
        raise ConfigError(errors)
    return runs


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="wavectl", description="Boundary control experiments for the 1-d wave equation.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the scenario described by a config file")
    run.add_argument("config", type=Path, help="scenario config file")
    run.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
    run.add_argument("--sweep", help="fan out over key=v1,v2,...; each value gets its own subdirectory")
    run.add_argument("--seed", type=int, help="override the seed key of the config")
    args = parser.parse_args(argv)

    try:
        text = args.config.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        runs = build_runs(text, args.out, args.sweep, args.seed)
        if len(runs) == 1:
            results = [run_experiment(*runs[0])]
        else:
            with ThreadPoolExecutor(max_workers=min(len(runs), 8)) as pool:
                results = list(pool.map(lambda r: run_experiment(*r), runs))
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ExperimentError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for paths in results:
        for p in paths:
            print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
