"""Moment agreement between the jump process and its diffusion approximation.

For each M, compares means and covariances of the jump-process ensemble with
the Euler-Maruyama ensemble of dZ = F(Z) dt + M^{-1/2} H(Z) dW.  Example:

    python scripts/mesoscopic_agreement.py --m-list 100,1000 --n-paths 6000
"""

import argparse

from energychain import ChainConfig, RateFunction, mesoscopic_comparison, render_text
from energychain.verify import write_report_csv


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n-cells", type=int, default=3)
    p.add_argument("--rate-fn", default="sqrt_product")
    p.add_argument("--t-left", type=float, default=1.0)
    p.add_argument("--t-right", type=float, default=1.5)
    p.add_argument("--m-list", default="100,1000")
    p.add_argument("--t-end", type=float, default=2.0)
    p.add_argument("--n-paths", type=int, default=6000)
    p.add_argument("--seed", type=int, default=20260810)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--csv")
    args = p.parse_args()

    cfg = ChainConfig(args.n_cells, 100, args.t_left, args.t_right,
                      RateFunction(args.rate_fn), master_seed=args.seed)
    rep = mesoscopic_comparison(cfg, [int(m) for m in args.m_list.split(",")],
                                args.t_end, n_paths=args.n_paths,
                                n_workers=args.workers)
    print(render_text(rep))
    if args.csv:
        write_report_csv(args.csv, rep)
    return 0 if rep.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
