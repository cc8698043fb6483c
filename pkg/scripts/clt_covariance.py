"""Covariance of sqrt(M)-rescaled deviations against the fluctuation SDE.

Simulates an ensemble of jump paths, rescales the final-time deviations from
the deterministic limit, and compares their covariance with the
covariance-evolution ODE.  Example:

    python scripts/clt_covariance.py --particles 1000 --n-paths 10000
"""

import argparse

from energychain import ChainConfig, RateFunction, clt_experiment, render_text
from energychain.verify import write_report_csv


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n-cells", type=int, default=3)
    p.add_argument("--rate-fn", default="sqrt_product")
    p.add_argument("--t-left", type=float, default=1.0)
    p.add_argument("--t-right", type=float, default=2.0)
    p.add_argument("--particles", type=int, default=1000)
    p.add_argument("--t-end", type=float, default=2.0)
    p.add_argument("--n-paths", type=int, default=10000)
    p.add_argument("--dt", type=float, default=0.005)
    p.add_argument("--seed", type=int, default=20260810)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--csv")
    args = p.parse_args()

    cfg = ChainConfig(args.n_cells, args.particles, args.t_left, args.t_right,
                      RateFunction(args.rate_fn), master_seed=args.seed)
    rep = clt_experiment(cfg, args.particles, args.t_end, n_paths=args.n_paths,
                         dt=args.dt, n_workers=args.workers)
    print(render_text(rep))
    if args.csv:
        write_report_csv(args.csv, rep)
    return 0 if rep.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
