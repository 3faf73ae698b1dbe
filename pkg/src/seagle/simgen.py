"""Simulation harness: genotype/phenotype generators and batch experiments.

Genotypes are parametric Binomial(2, maf) dosages with a configurable MAF
band. Phenotypes come from either a random-effects model (G and GxE effects
drawn as Gaussians with variances tau and nu) or a fixed-effects model with
a chosen number of causal loci. Experiments regenerate everything per
replicate from independent child seeds, so results are reproducible and
independent of execution order.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import GenotypeError, ParameterError, SeagleError
from .reml import EmConfig
from .vctest import STATUS_OK, build_input, run_test

_MAX_REDRAWS = 100


@dataclass(frozen=True)
class SimConfig:
    """One experiment: scale, generative mode, effect sizes, replication."""

    n: int = 1000
    L: int = 50
    mode: str = "random_effects"
    tau: float = 1.0
    sigma: float = 1.0
    nu: float = 0.0
    gamma_G: float = 0.0
    gamma_GE: float = 0.0
    ell: int = 0
    maf_low: float = 0.005
    maf_high: float = 0.05
    replicates: int = 1000
    alpha_levels: tuple = (0.05, 0.005)
    seed: int = 0
    em: EmConfig = field(default_factory=EmConfig)
    compare_oracle: bool = False

    def __post_init__(self):
        if self.mode not in ("random_effects", "fixed_effects"):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if not (0.0 < self.maf_low < self.maf_high < 0.5):
            raise ParameterError(
                f"need 0 < maf_low < maf_high < 0.5, got ({self.maf_low}, {self.maf_high})"
            )
        if self.ell > self.L:
            raise ParameterError(f"ell={self.ell} exceeds L={self.L}")
        if self.replicates < 1:
            raise ParameterError("replicates must be >= 1")


@dataclass(frozen=True)
class AlphaRow:
    alpha: float
    rate: float
    std_error: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class ExperimentReport:
    config: SimConfig
    n_completed: int
    n_failed: int
    alpha_rows: tuple
    bias_tau: float | None
    mse_tau: float | None
    bias_sigma: float | None
    mse_sigma: float | None
    max_oracle_stat_diff: float | None
    records: tuple  # per-replicate dicts

    def summary(self):
        cfg = self.config
        lines = [
            f"mode={cfg.mode} n={cfg.n} L={cfg.L} replicates={cfg.replicates} "
            f"seed={cfg.seed} (completed={self.n_completed}, failed={self.n_failed})"
        ]
        for row in self.alpha_rows:
            lines.append(
                f"alpha={row.alpha:g}: rejection rate {row.rate:.5f} "
                f"(SE {row.std_error:.5f}, 95% CI {row.ci_low:.5f}-{row.ci_high:.5f})"
            )
        if self.bias_tau is not None:
            lines.append(
                f"tau: bias {self.bias_tau:+.4e}, MSE {self.mse_tau:.4e}; "
                f"sigma: bias {self.bias_sigma:+.4e}, MSE {self.mse_sigma:.4e}"
            )
        if self.max_oracle_stat_diff is not None:
            lines.append(f"max |T_fast - T_oracle| = {self.max_oracle_stat_diff:.3e}")
        return "\n".join(lines)


def _rng_of(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def gen_genotypes(n, L, maf_low, maf_high, seed):
    """Binomial(2, maf) dosage matrix with per-column maf ~ U(maf_low, maf_high).

    Monomorphic columns are redrawn; generation fails after 100 attempts on
    any column (maf too small for this n).
    """
    if not (0.0 < maf_low <= maf_high < 0.5):
        raise ParameterError(f"invalid maf band ({maf_low}, {maf_high})")
    rng = _rng_of(seed)
    G = np.empty((n, L))
    for j in range(L):
        for _ in range(_MAX_REDRAWS):
            maf = rng.uniform(maf_low, maf_high)
            col = rng.binomial(2, maf, size=n).astype(np.float64)
            if col.min() != col.max():
                G[:, j] = col
                break
        else:
            raise GenotypeError(
                f"could not draw a polymorphic column {j} after {_MAX_REDRAWS} "
                f"attempts; increase maf_low (currently {maf_low}) or n"
            )
    return G


def gen_covariates(n, seed):
    """Confounder and environment, both standard normal; returns (X, env)
    where X = [1 | confounder | env]."""
    rng = _rng_of(seed)
    conf = rng.standard_normal(n)
    env = rng.standard_normal(n)
    return np.column_stack([np.ones(n), conf, env]), env


def gen_random_effects_pheno(X, G, env, tau, sigma, nu, seed):
    """y = X 1 + G b + diag(env) G c + eps with b ~ N(0, tau I),
    c ~ N(0, nu I), eps ~ N(0, sigma I). Zero variances give degenerate
    (deterministic) components."""
    if min(tau, sigma, nu) < 0:
        raise ParameterError("variance components must be nonnegative")
    rng = _rng_of(seed)
    n, L = G.shape
    y = X @ np.ones(X.shape[1])
    if tau > 0:
        y = y + G @ rng.normal(0.0, np.sqrt(tau), size=L)
    if nu > 0:
        y = y + env * (G @ rng.normal(0.0, np.sqrt(nu), size=L))
    if sigma > 0:
        y = y + rng.normal(0.0, np.sqrt(sigma), size=n)
    return y


def gen_fixed_effects_pheno(X, G, env, gamma_G, gamma_GE, ell, sigma, seed):
    """y = X 1 + G g + diag(env) G h + eps where the first ``ell`` entries of
    g and h are gamma_G and gamma_GE and the rest are zero."""
    n, L = G.shape
    if not (0 <= ell <= L):
        raise ParameterError(f"ell must be in [0, {L}], got {ell}")
    if sigma < 0:
        raise ParameterError("sigma must be nonnegative")
    rng = _rng_of(seed)
    g = np.zeros(L)
    h = np.zeros(L)
    g[:ell] = gamma_G
    h[:ell] = gamma_GE
    y = X @ np.ones(X.shape[1]) + G @ g + env * (G @ h)
    if sigma > 0:
        y = y + rng.normal(0.0, np.sqrt(sigma), size=n)
    return y


def _one_replicate(cfg, child_seed):
    from . import oracle  # local import; test-only dependency direction

    rng = np.random.default_rng(child_seed)
    started = time.perf_counter()
    try:
        G = gen_genotypes(cfg.n, cfg.L, cfg.maf_low, cfg.maf_high, rng)
        X, env = gen_covariates(cfg.n, rng)
        if cfg.mode == "random_effects":
            y = gen_random_effects_pheno(X, G, env, cfg.tau, cfg.sigma, cfg.nu, rng)
        else:
            y = gen_fixed_effects_pheno(
                X, G, env, cfg.gamma_G, cfg.gamma_GE, cfg.ell, cfg.sigma, rng
            )
        inp = build_input(y, X, env, G)
        res = run_test(inp, cfg.em)
        rec = {
            "T": res.statistic_T,
            "p": res.p_value,
            "p_davies": res.p_davies,
            "p_liu": res.p_liu,
            "tau_hat": res.tau_hat,
            "sigma_hat": res.sigma_hat,
            "n_iter": res.n_iter,
            "converged": res.converged,
            "status": res.status,
            "wall_time": time.perf_counter() - started,
        }
        if cfg.compare_oracle:
            T_dense, _ = oracle.dense_statistic(inp, res.tau_hat, res.sigma_hat)
            rec["oracle_stat_diff"] = abs(res.statistic_T - T_dense)
        return rec
    except SeagleError as exc:
        return {"status": f"error:{type(exc).__name__}", "error": str(exc)}


def run_experiment(cfg, threads=1):
    """Run all replicates, aggregate rejection rates and estimator quality.

    Each replicate draws from its own child of ``cfg.seed``, so the report is
    identical regardless of thread count or scheduling.
    """
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.replicates)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda s: _one_replicate(cfg, s), children))
    else:
        records = [_one_replicate(cfg, s) for s in children]

    good = [r for r in records if not r["status"].startswith("error")]
    n_failed = len(records) - len(good)
    pvals = np.array([r["p"] for r in good])
    rows = []
    for alpha in cfg.alpha_levels:
        if len(good) == 0:
            rows.append(AlphaRow(alpha, float("nan"), float("nan"), float("nan"), float("nan")))
            continue
        rate = float(np.mean(pvals < alpha))
        se = float(np.sqrt(rate * (1.0 - rate) / len(good)))
        rows.append(
            AlphaRow(alpha, rate, se, max(rate - 1.96 * se, 0.0), min(rate + 1.96 * se, 1.0))
        )

    bias_tau = mse_tau = bias_sigma = mse_sigma = None
    if cfg.mode == "random_effects" and cfg.nu == 0.0 and good:
        tau_hats = np.array([r["tau_hat"] for r in good])
        sigma_hats = np.array([r["sigma_hat"] for r in good])
        bias_tau = float(np.mean(tau_hats - cfg.tau))
        mse_tau = float(np.mean((tau_hats - cfg.tau) ** 2))
        bias_sigma = float(np.mean(sigma_hats - cfg.sigma))
        mse_sigma = float(np.mean((sigma_hats - cfg.sigma) ** 2))

    max_diff = None
    if cfg.compare_oracle and good:
        max_diff = float(max(r.get("oracle_stat_diff", 0.0) for r in good))

    return ExperimentReport(
        config=cfg,
        n_completed=len(good),
        n_failed=n_failed,
        alpha_rows=tuple(rows),
        bias_tau=bias_tau,
        mse_tau=mse_tau,
        bias_sigma=bias_sigma,
        mse_sigma=mse_sigma,
        max_oracle_stat_diff=max_diff,
        records=tuple(records),
    )


REPORT_COLUMNS = (
    "replicate",
    "status",
    "T",
    "p",
    "p_davies",
    "p_liu",
    "tau_hat",
    "sigma_hat",
    "n_iter",
    "converged",
    "wall_time",
)


def write_report(report, path):
    """Machine-readable per-replicate table (tab-separated)."""
    with open(path, "w") as fh:
        fh.write("\t".join(REPORT_COLUMNS) + "\n")
        for i, rec in enumerate(report.records):
            if rec["status"].startswith("error"):
                row = [str(i), rec["status"]] + ["NA"] * (len(REPORT_COLUMNS) - 2)
            else:
                row = [
                    str(i),
                    rec["status"],
                    f"{rec['T']:.6e}",
                    f"{rec['p']:.6e}",
                    f"{rec['p_davies']:.6e}",
                    f"{rec['p_liu']:.6e}",
                    f"{rec['tau_hat']:.6e}",
                    f"{rec['sigma_hat']:.6e}",
                    str(rec["n_iter"]),
                    "true" if rec["converged"] else "false",
                    f"{rec['wall_time']:.6e}",
                ]
            fh.write("\t".join(row) + "\n")
