"""``heatcount <experiment> --config FILE [--out DIR] [--threads N] [--serial]``"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from heatcount.runner import (
    EXPERIMENTS,
    ConfigError,
    RunConfig,
    RunFailed,
    has_errors,
    load_config,
    run,
    validate,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heatcount",
        description="Heat counting statistics of the spin-boson model with a reaction coordinate.",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS + ("validate",))
    parser.add_argument("--config", help="JSON run configuration (defaults if omitted)")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument("--threads", type=int, help="worker threads (default: HEATCOUNT_THREADS or cores)")
    parser.add_argument("--serial", action="store_true", help="force single-threaded execution")
    parser.add_argument("--plot", action="store_true", help="also write a quick-look SVG")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _load(args) -> RunConfig:
    experiment = None if args.experiment == "validate" else args.experiment
    if args.config:
        config = load_config(args.config, experiment)
    else:
        config = RunConfig(experiment=experiment or "benchmark-dynamics")
    if args.out:
        config.output_dir = type(config.output_dir)(args.out)
    if args.threads is not None:
        config.threads = args.threads
    if args.plot:
        config.plot = True
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2

    if args.experiment == "validate":
        diags = validate(config)
        for d in diags:
            print(f"{d.level:7s} {d.code:24s} {d.message}")
        return 1 if has_errors(diags) else 0

    try:
        manifest = run(config, serial=args.serial)
    except RunFailed as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(json.dumps({"output_dir": str(config.output_dir), "outputs": manifest["outputs"],
                      "wall_time_s": round(manifest["wall_time_s"], 3)}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
