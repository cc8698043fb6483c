"""Sup-norm convergence of the jump process to its deterministic limit.

Runs path ensembles at several M, fits the log-log error slope (expected
near -1/2), and prints the report.  Example:

    python scripts/lln_scaling.py --m-list 100,1000,10000 --n-paths 200
"""

import argparse

from energychain import ChainConfig, RateFunction, lln_experiment, render_text
from energychain.verify import write_report_csv


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n-cells", type=int, default=5)
    p.add_argument("--rate-fn", default="sqrt_product")
    p.add_argument("--t-left", type=float, default=1.0)
    p.add_argument("--t-right", type=float, default=2.0)
    p.add_argument("--m-list", default="100,1000,10000")
    p.add_argument("--t-end", type=float, default=5.0)
    p.add_argument("--n-paths", type=int, default=200)
    p.add_argument("--seed", type=int, default=20260810)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--csv", help="write the report table to this path")
    args = p.parse_args()

    cfg = ChainConfig(args.n_cells, 100, args.t_left, args.t_right,
                      RateFunction(args.rate_fn), master_seed=args.seed)
    rep = lln_experiment(cfg, [int(m) for m in args.m_list.split(",")],
                         args.t_end, n_paths=args.n_paths, n_workers=args.workers)
    print(render_text(rep))
    if args.csv:
        write_report_csv(args.csv, rep)
    return 0 if rep.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
