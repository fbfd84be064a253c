"""Command-line interface.

Verbs:
    run <config.yaml | preset>   execute a campaign
    aggregate <campaign_dir>     (re)build aggregate.csv from run CSVs
    list-presets                 show built-in campaign names
    validate <config.yaml>       schema-check a config file

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .configs import ConfigError, list_presets, load_config, preset
from .runner import aggregate, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="subeki",
        description="Ensemble Kalman inversion with randomized data subsampling.",
    )
    sub = p.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="execute a campaign from a config file or preset")
    run.add_argument("config", help="path to a YAML config, or a preset name")
    run.add_argument("--seed", type=int, help="override the master seed")
    run.add_argument("--runs", type=int, help="override the number of runs")
    run.add_argument("--out", help="campaign output directory (default: ./<name>)")
    run.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    agg = sub.add_parser("aggregate", help="aggregate run CSVs in a campaign directory")
    agg.add_argument("dir", help="campaign directory containing run_*.csv")

    sub.add_parser("list-presets", help="list built-in campaign presets")

    val = sub.add_parser("validate", help="schema-check a config file")
    val.add_argument("config", help="path to a YAML config")
    return p


def _resolve_config(arg: str):
    if Path(arg).exists() or arg.endswith((".yml", ".yaml")):
        return load_config(arg)
    return preset(arg)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.verb == "run":
            cfg = _resolve_config(args.config)
            overrides = {}
            if args.seed is not None:
                overrides["master_seed"] = args.seed
            if args.runs is not None:
                overrides["n_runs"] = args.runs
            if overrides:
                cfg = dataclasses.replace(cfg, **overrides)
            out = args.out or cfg.name
            path = run_experiment(cfg, out, n_jobs=max(1, args.jobs))
            print(f"campaign written to {path}")
            return EXIT_OK
        if args.verb == "aggregate":
            path = aggregate(args.dir)
            print(f"aggregate written to {path}")
            return EXIT_OK
        if args.verb == "list-presets":
            for name in list_presets():
                print(name)
            return EXIT_OK
        if args.verb == "validate":
            cfg = load_config(args.config)
            print(f"ok: {cfg.name} ({cfg.method}, {cfg.variant}, "
                  f"{cfg.n_runs} runs to t = {cfg.t_end:g})")
            return EXIT_OK
        raise AssertionError(args.verb)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
