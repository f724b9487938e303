#!/usr/bin/env python3
"""Write a synthetic daily price series driven by a simulated stochastic-volatility path.

Stand-in for the real index closes when they are not available locally.  The
log-volatility follows the SV model on percent returns, so the file exercises
the same pipeline as the real data.
"""

import argparse
import datetime as dt

import numpy as np

from riesz_smc import hmm_models as hm


def business_days(start: dt.date, n: int):
    days, d = [], start
    while len(days) < n:
        if d.weekday() < 5:
            days.append(d)
        d += dt.timedelta(days=1)
    return days


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/synthetic_prices.csv")
    ap.add_argument("--rows", type=int, default=252)
    ap.add_argument("--seed", type=int, default=2015)
    ap.add_argument("--start", default="2015-01-02")
    ap.add_argument("--mu", type=float, default=0.2)
    ap.add_argument("--persistence", type=float, default=0.95)
    ap.add_argument("--sigma-v", type=float, default=0.25)
    args = ap.parse_args(argv)
    p = hm.SvParams(mu=args.mu, persistence=args.persistence, sigma_v=args.sigma_v)
    _, y = hm.sv_simulate(args.rows - 1, p, seed=args.seed)
    closes = 1500.0 * np.exp(np.concatenate([[0.0], np.cumsum(y / 100.0)]))
    dates = business_days(dt.date.fromisoformat(args.start), args.rows)
    hm.write_price_csv(args.out, dates, closes)
    print(f"wrote {args.rows} rows to {args.out}")


if __name__ == "__main__":
    main()
