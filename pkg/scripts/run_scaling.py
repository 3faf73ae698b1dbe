#!/usr/bin/env python3
"""Wall-clock scaling experiment.

Times a complete single-gene test (null model fit, statistic, eigenvalues,
p-value) across a grid of sample sizes at fixed L, and reports peak memory.
Example:

    python scripts/run_scaling.py --n-grid 10000,20000,50000,100000 --L 100
"""

import argparse
import resource
import time

import numpy as np

from seagle.simgen import gen_covariates, gen_genotypes, gen_random_effects_pheno
from seagle.vctest import build_input, run_test


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--n-grid", default="10000,20000,50000,100000")
    ap.add_argument("--L", type=int, default=100)
    ap.add_argument("--maf-low", type=float, default=0.01)
    ap.add_argument("--maf-high", type=float, default=0.05)
    ap.add_argument("--seed", type=int, default=4242)
    args = ap.parse_args()

    print("n\tL\tseconds\tem_iters\tpeak_rss_mb")
    prev = None
    for n in (int(v) for v in args.n_grid.split(",")):
        rng = np.random.default_rng(args.seed)
        G = gen_genotypes(n, args.L, args.maf_low, args.maf_high, rng)
        X, env = gen_covariates(n, rng)
        y = gen_random_effects_pheno(X, G, env, 1.0, 1.0, 0.0, rng)
        inp = build_input(y, X, env, G)
        t0 = time.perf_counter()
        res = run_test(inp)
        dt = time.perf_counter() - t0
        rss = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024
        ratio = "" if prev is None else f"  (x{dt / prev:.2f} vs previous n)"
        print(f"{n}\t{args.L}\t{dt:.3f}\t{res.n_iter}\t{rss:.0f}{ratio}")
        prev = dt


if __name__ == "__main__":
    main()
