"""Long-run chain moments against the Gaussian steady-state picture N(E*, S/M).

One long stationary run with batch-means error bars: the time-averaged mean
is compared with the equilibrium profile and the time-averaged covariance
with the Lyapunov solution scaled by 1/M.  Example:

    python scripts/ness_covariance.py --particles 200 --t-measure 1000
"""

import argparse

from energychain import ChainConfig, RateFunction, ness_experiment, render_text
from energychain.verify import write_report_csv


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n-cells", type=int, default=3)
    p.add_argument("--rate-fn", default="sqrt_product")
    p.add_argument("--t-left", type=float, default=1.0)
    p.add_argument("--t-right", type=float, default=1.5)
    p.add_argument("--particles", type=int, default=200)
    p.add_argument("--t-measure", type=float, default=1000.0)
    p.add_argument("--burn-in", type=float, default=None,
                   help="default: five slowest relaxation times")
    p.add_argument("--n-batches", type=int, default=20)
    p.add_argument("--seed", type=int, default=20260810)
    p.add_argument("--csv")
    args = p.parse_args()

    cfg = ChainConfig(args.n_cells, args.particles, args.t_left, args.t_right,
                      RateFunction(args.rate_fn), master_seed=args.seed)
    rep = ness_experiment(cfg, burn_in=args.burn_in, t_measure=args.t_measure,
                          n_batches=args.n_batches)
    print(render_text(rep))
    if args.csv:
        write_report_csv(args.csv, rep)
    return 0 if rep.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
