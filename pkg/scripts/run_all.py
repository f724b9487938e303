#!/usr/bin/env python3
"""Run every experiment with its default settings and print where results went.

    python scripts/run_all.py --out results            # all five experiments
    python scripts/run_all.py --only qq-uniformity lgss-filter-table
    python scripts/run_all.py --prices path/to/closes.csv

sv-real-data uses data/synthetic_prices.csv unless --prices is given.
"""

import argparse
import sys
import time
from pathlib import Path

from riesz_smc import experiments as ex

ROOT = Path(__file__).resolve().parents[1]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="results")
    ap.add_argument("--only", nargs="+", choices=ex.EXPERIMENTS, default=list(ex.EXPERIMENTS))
    ap.add_argument("--prices", default=str(ROOT / "data" / "synthetic_prices.csv"))
    args = ap.parse_args(argv)

    for name in args.only:
        raw = {"data_path": args.prices} if name == "sv-real-data" else None
        cfg = ex.build_config(raw, name, out_dir=Path(args.out) / name)
        t0 = time.perf_counter()
        files = ex.run(cfg)
        print(f"{name}: {len(files)} files in {cfg.out_dir} ({time.perf_counter() - t0:.0f}s)", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
