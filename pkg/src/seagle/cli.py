"""Command-line interface.

Subcommands: ``test`` (single gene), ``batch`` (gene-set file), ``sim``
(simulation experiments), ``bench`` (scaling timings). Progress and warnings
go to stderr; exit code is 0 on success and nonzero on fatal errors. The
``SEAGLE_THREADS`` environment variable overrides the default thread count.
"""

import argparse
import logging
import os
import sys
import time

import numpy as np

from .exceptions import SeagleError
from .io import RunManifest, run_batch, write_results
from .reml import EmConfig
from .simgen import SimConfig, gen_covariates, gen_genotypes, gen_random_effects_pheno
from .simgen import run_experiment, write_report
from .vctest import build_input, run_test


def _default_threads():
    env = os.environ.get("SEAGLE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _add_io_args(sub):
    sub.add_argument("--genotypes", required=True, help="genotype file")
    sub.add_argument("--format", choices=["tsv", "plink_raw"], default="tsv")
    sub.add_argument("--pheno", required=True, help="phenotype/covariate file")
    sub.add_argument("--pheno-col", required=True, help="trait column name")
    sub.add_argument("--env-col", required=True, help="environment column name")
    sub.add_argument(
        "--covar-cols",
        default="",
        help="comma-separated covariate column names (may be empty)",
    )
    sub.add_argument("--out", required=True, help="output path")
    _add_common(sub)


def _add_common(sub):
    sub.add_argument(
        "--pvalue-method", choices=["davies", "liu", "both"], default="both"
    )
    sub.add_argument("--tol", type=float, default=1e-5, help="EM relative tolerance")
    sub.add_argument("--max-iter", type=int, default=500, help="EM iteration cap")
    sub.add_argument(
        "--davies-acc", type=float, default=1e-9, help="Davies accuracy target"
    )
    sub.add_argument("--threads", type=int, default=_default_threads())
    sub.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="seagle",
        description="Scalable exact variance-component GxE tests",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="test a single gene (all SNPs in the file)")
    _add_io_args(p_test)
    p_test.add_argument("--gene-name", default="all", help="label for the output row")

    p_batch = sub.add_parser("batch", help="test every gene in a gene-set file")
    _add_io_args(p_batch)
    p_batch.add_argument("--genes", required=True, help="gene-set definition file")

    p_sim = sub.add_parser("sim", help="run a simulation experiment")
    p_sim.add_argument("--mode", choices=["random_effects", "fixed_effects"],
                       default="random_effects")
    p_sim.add_argument("--n", type=int, default=1000)
    p_sim.add_argument("--L", type=int, default=50)
    p_sim.add_argument("--replicates", type=int, default=1000)
    p_sim.add_argument("--tau", type=float, default=1.0)
    p_sim.add_argument("--sigma", type=float, default=1.0)
    p_sim.add_argument("--nu", type=float, default=0.0)
    p_sim.add_argument("--gamma-g", type=float, default=0.0)
    p_sim.add_argument("--gamma-ge", type=float, default=0.0)
    p_sim.add_argument("--ell", type=int, default=0)
    p_sim.add_argument("--maf-low", type=float, default=0.005)
    p_sim.add_argument("--maf-high", type=float, default=0.05)
    p_sim.add_argument("--alpha", default="0.05,0.005",
                       help="comma-separated nominal levels")
    p_sim.add_argument("--out", default=None, help="per-replicate table path")
    _add_common(p_sim)

    p_bench = sub.add_parser("bench", help="time the full test across sample sizes")
    p_bench.add_argument("--n-grid", default="10000,20000,50000",
                         help="comma-separated sample sizes")
    p_bench.add_argument("--L", type=int, default=100)
    p_bench.add_argument("--out", default=None)
    _add_common(p_bench)
    return parser


def _em_config(args):
    return EmConfig(rel_tol=args.tol, max_iter=args.max_iter)


def _manifest(args, genes):
    covars = tuple(c for c in args.covar_cols.split(",") if c)
    return RunManifest(
        genotypes=args.genotypes,
        format=args.format,
        pheno=args.pheno,
        pheno_col=args.pheno_col,
        env_col=args.env_col,
        covar_cols=covars,
        genes=genes,
        out=args.out,
        em=_em_config(args),
        davies_acc=args.davies_acc,
        pvalue_method=args.pvalue_method,
        threads=args.threads,
        seed=args.seed,
    )


def _cmd_test(args):
    rows = run_batch(_manifest(args, genes=None))
    if args.gene_name != "all":
        import dataclasses

        rows = [dataclasses.replace(rows[0], gene=args.gene_name)]
        write_results(rows, args.out)
    r = rows[0]
    print(
        f"{r.gene}: T={r.T:.6e} p_davies={r.p_davies:.6e} p_liu={r.p_liu:.6e} "
        f"[{r.status}]",
        file=sys.stderr,
    )
    return 0


def _cmd_batch(args):
    rows = run_batch(_manifest(args, genes=args.genes))
    n_err = sum(1 for r in rows if r.status.startswith("error"))
    print(
        f"tested {len(rows)} genes ({n_err} failed) -> {args.out}", file=sys.stderr
    )
    return 0


def _cmd_sim(args):
    cfg = SimConfig(
        n=args.n,
        L=args.L,
        mode=args.mode,
        tau=args.tau,
        sigma=args.sigma,
        nu=args.nu,
        gamma_G=args.gamma_g,
        gamma_GE=args.gamma_ge,
        ell=args.ell,
        maf_low=args.maf_low,
        maf_high=args.maf_high,
        replicates=args.replicates,
        alpha_levels=tuple(float(a) for a in args.alpha.split(",")),
        seed=args.seed,
        em=_em_config(args),
    )
    report = run_experiment(cfg, threads=args.threads)
    if args.out:
        write_report(report, args.out)
        print(f"per-replicate table -> {args.out}", file=sys.stderr)
    print(report.summary())
    return 0


def _cmd_bench(args):
    grid = [int(v) for v in args.n_grid.split(",")]
    lines = ["n\tL\tseconds\tem_iters"]
    for n in grid:
        rng = np.random.default_rng(args.seed)
        G = gen_genotypes(n, args.L, 0.01, 0.05, rng)
        X, env = gen_covariates(n, rng)
        y = gen_random_effects_pheno(X, G, env, 1.0, 1.0, 0.0, rng)
        inp = build_input(y, X, env, G)
        t0 = time.perf_counter()
        res = run_test(inp, _em_config(args), davies_acc=args.davies_acc)
        dt = time.perf_counter() - t0
        lines.append(f"{n}\t{args.L}\t{dt:.3f}\t{res.n_iter}")
        print(f"n={n}: {dt:.3f}s ({res.n_iter} EM iterations)", file=sys.stderr)
    out = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out)
    else:
        print(out, end="")
    return 0


_COMMANDS = {
    "test": _cmd_test,
    "batch": _cmd_batch,
    "sim": _cmd_sim,
    "bench": _cmd_bench,
}


def main(argv=None):
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except SeagleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
