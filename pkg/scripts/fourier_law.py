"""Conductivity against the small-gap law and long-run bond fluxes.

For each temperature gap: solve the equilibrium profile, form
kappa = c* (N+1) / (2 dT), check the monotone sandwich and the linear
shrinkage of |kappa - f(T_L, T_L)/2|, and compare against the time-averaged
flux of stationary simulation runs.  Example:

    python scripts/fourier_law.py --delta-list 0.2,0.1,0.05 --particles 500
"""

import argparse

from energychain import ChainConfig, RateFunction, fourier_experiment, render_text
from energychain.verify import write_report_csv


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n-cells", type=int, default=3)
    p.add_argument("--rate-fn", default="sqrt_product")
    p.add_argument("--t-left", type=float, default=1.0)
    p.add_argument("--particles", type=int, default=500)
    p.add_argument("--delta-list", default="0.2,0.1,0.05")
    p.add_argument("--t-end", type=float, default=1000.0)
    p.add_argument("--n-paths", type=int, default=2)
    p.add_argument("--seed", type=int, default=20260810)
    p.add_argument("--csv")
    args = p.parse_args()

    cfg = ChainConfig(args.n_cells, args.particles, args.t_left, args.t_left + 1.0,
                      RateFunction(args.rate_fn), master_seed=args.seed)
    rep = fourier_experiment(cfg, [float(d) for d in args.delta_list.split(",")],
                             n_paths=args.n_paths, t_end=args.t_end)
    print(render_text(rep))
    if args.csv:
        write_report_csv(args.csv, rep)
    return 0 if rep.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
