"""``riesz-smc <experiment> [--config PATH] [--out DIR] [--seeds s1,s2,...]``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import experiments as ex
from .errors import InvalidDataError, InvalidInputError


def _seeds(text: str):
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("empty seed list")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="riesz-smc", description="Chebyshev-particle experiments.")
    ap.add_argument("experiment", choices=ex.EXPERIMENTS)
    ap.add_argument("--config", help="JSON config file; omitted sections take defaults")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--seeds", type=_seeds, help="comma-separated master seeds (overrides the config)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    overrides = {"experiment": args.experiment, "out_dir": args.out, "seeds": args.seeds}
    try:
        if args.config:
            cfg = ex.load_config(args.config, **overrides)
        else:
            cfg = ex.build_config(None, **overrides)
        files = ex.run(cfg)
    except (InvalidInputError, InvalidDataError, OSError) as exc:
        print(f"riesz-smc: error: {exc}", file=sys.stderr)
        return 2
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
