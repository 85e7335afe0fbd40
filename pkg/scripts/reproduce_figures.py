"""Run every experiment from ``configs/`` and collect the outputs under ``results/``.

    python3 scripts/reproduce_figures.py [--only moments cf-scan] [--threads N]
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from heatcount.runner import EXPERIMENTS, RunFailed, load_config, run

ROOT = Path(__file__).resolve().parents[1]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--only", nargs="*", choices=EXPERIMENTS, default=list(EXPERIMENTS))
    ap.add_argument("--threads", type=int)
    ap.add_argument("--out", type=Path, default=ROOT / "results")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    status = 0
    for name in args.only:
        cfg = load_config(ROOT / "configs" / f"{name}.json")
        cfg.output_dir = args.out / name
        if args.threads is not None:
            cfg.threads = args.threads
        try:
            manifest = run(cfg)
        except RunFailed as exc:
            logging.error("%s failed: %s", name, exc)
            status = 1
            continue
        logging.info("%s: %.1f s -> %s", name, manifest["wall_time_s"], cfg.output_dir)
        print(json.dumps({"experiment": name, "outputs": manifest["outputs"]}))
    return status


if __name__ == "__main__":
    sys.exit(main())
