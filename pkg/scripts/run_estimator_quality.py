#!/usr/bin/env python3
"""Variance-component estimator quality experiment.

Simulates null phenotypes with known (tau, sigma) and reports bias and MSE
of the restricted-likelihood EM estimates. Example:

    python scripts/run_estimator_quality.py --n 1000 --L 50 --replicates 500
"""

import argparse

from seagle.simgen import SimConfig, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--L", type=int, default=50)
    ap.add_argument("--tau", type=float, default=1.0)
    ap.add_argument("--sigma", type=float, default=1.0)
    ap.add_argument("--replicates", type=int, default=500)
    ap.add_argument("--maf-low", type=float, default=0.1)
    ap.add_argument("--maf-high", type=float, default=0.4)
    ap.add_argument("--seed", type=int, default=20240)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    cfg = SimConfig(
        n=args.n, L=args.L, tau=args.tau, sigma=args.sigma, nu=0.0,
        replicates=args.replicates, maf_low=args.maf_low, maf_high=args.maf_high,
        seed=args.seed,
    )
    report = run_experiment(cfg, threads=args.threads)
    print(report.summary())


if __name__ == "__main__":
    main()
