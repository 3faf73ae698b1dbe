"""File parsing and result serialization for batch testing.

Formats:

* genotype ``tsv``: header of SNP ids (first cell is the id column name),
  one row per sample, first column the sample id, remaining columns numeric
  dosages. ``NA`` dosages are mean-imputed per column.
* genotype ``plink_raw``: whitespace-delimited PLINK --recode A output with
  columns FID IID PAT MAT SEX PHENOTYPE followed by SNP_allele dosages;
  the IID column is the sample id.
* phenotype/covariates: tab-separated, header row, first column sample id,
  remaining columns numeric.
* gene sets: one gene per line, ``name<TAB>snp1,snp2,...``.
* results: tab-separated with a fixed header, floats at six significant
  digits, rows in input gene order.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParseError, SeagleError
from .reml import EmConfig
from .vctest import build_input, run_test

log = logging.getLogger("seagle")

RESULT_HEADER = (
    "gene",
    "n",
    "L",
    "T",
    "p_davies",
    "p_liu",
    "tau_hat",
    "sigma_hat",
    "em_iters",
    "converged",
    "status",
)


@dataclass(frozen=True)
class GenotypeData:
    matrix: np.ndarray
    snp_ids: tuple
    sample_ids: tuple
    n_imputed: int = 0


@dataclass(frozen=True)
class PhenotypeData:
    columns: dict  # name -> ndarray
    sample_ids: tuple


@dataclass(frozen=True)
class GeneSetDefinition:
    gene_name: str
    snp_ids: tuple

    def __post_init__(self):
        if len(self.snp_ids) == 0:
            raise ParseError(f"gene {self.gene_name!r} has an empty SNP list")
        if len(set(self.snp_ids)) != len(self.snp_ids):
            dupes = sorted({s for s in self.snp_ids if self.snp_ids.count(s) > 1})
            raise ParseError(f"gene {self.gene_name!r} lists duplicate SNP ids: {dupes}")


@dataclass(frozen=True)
class RunManifest:
    """Everything a batch run needs; validated against the loaded files."""

    genotypes: str
    format: str
    pheno: str
    pheno_col: str
    env_col: str
    covar_cols: tuple
    genes: str | None
    out: str
    em: EmConfig = field(default_factory=EmConfig)
    davies_acc: float = 1e-9
    pvalue_method: str = "both"
    threads: int = 1
    seed: int = 0


def _parse_dosage_rows(rows, snp_ids, path, first_data_line):
    """Common tail of both genotype parsers: numeric conversion + imputation."""
    L = len(snp_ids)
    mat = np.empty((len(rows), L))
    missing = []
    for i, (lineno, fields) in enumerate(rows):
        if len(fields) != L:
            raise ParseError(
                f"{path}:{lineno}: expected {L} dosages, found {len(fields)}"
            )
        for j, tok in enumerate(fields):
            if tok == "NA":
                mat[i, j] = np.nan
                missing.append((i, j))
            else:
                try:
                    mat[i, j] = float(tok)
                except ValueError:
                    raise ParseError(
                        f"{path}:{lineno}: non-numeric dosage {tok!r} in column "
                        f"{snp_ids[j]!r}"
                    ) from None
    n_imputed = len(missing)
    if n_imputed:
        observed = ~np.isnan(mat)
        if not observed.any(axis=0).all():
            bad = snp_ids[int(np.argmin(observed.any(axis=0)))]
            raise ParseError(f"{path}: column {bad!r} has no observed dosages")
        means = np.nanmean(mat, axis=0)
        for i, j in missing:
            mat[i, j] = means[j]
        log.warning("%s: mean-imputed %d missing dosages", path, n_imputed)
    return mat, n_imputed


def _read_lines(path):
    try:
        with open(path) as fh:
            return [ln.rstrip("\n") for ln in fh]
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def parse_genotypes(path, format="tsv"):
    """Parse a genotype file into (matrix, snp_ids, sample_ids)."""
    if format not in ("tsv", "plink_raw"):
        raise ParseError(f"unknown genotype format {format!r}")
    lines = _read_lines(path)
    lines = [ln for ln in lines if ln.strip() != ""]
    if not lines:
        raise ParseError(f"{path}: empty genotype file")
    if format == "tsv":
        header = lines[0].split("\t")
        snp_ids = tuple(header[1:])
        meta = 1
        split = lambda ln: ln.split("\t")
    else:
        header = lines[0].split()
        if len(header) < 7 or header[:6] != ["FID", "IID", "PAT", "MAT", "SEX", "PHENOTYPE"]:
            raise ParseError(
                f"{path}:1: plink_raw header must start with "
                "'FID IID PAT MAT SEX PHENOTYPE'"
            )
        snp_ids = tuple(header[6:])
        meta = 6
        split = str.split
    if not snp_ids:
        raise ParseError(f"{path}:1: no SNP columns in header")
    sample_ids = []
    rows = []
    for lineno, ln in enumerate(lines[1:], start=2):
        fields = split(ln)
        if len(fields) < meta + 1:
            raise ParseError(f"{path}:{lineno}: ragged row with {len(fields)} fields")
        sample_ids.append(fields[1] if format == "plink_raw" else fields[0])
        rows.append((lineno, fields[meta:]))
    if not rows:
        raise ParseError(f"{path}: no sample rows")
    mat, n_imputed = _parse_dosage_rows(rows, snp_ids, path, 2)
    return GenotypeData(
        matrix=mat,
        snp_ids=snp_ids,
        sample_ids=tuple(sample_ids),
        n_imputed=n_imputed,
    )


def parse_phenotypes(path):
    """Tab-separated table with a header: sample id column plus numeric columns."""
    lines = _read_lines(path)
    lines = [ln for ln in lines if ln.strip() != ""]
    if len(lines) < 2:
        raise ParseError(f"{path}: phenotype file needs a header and data rows")
    header = lines[0].split("\t")
    names = header[1:]
    if not names:
        raise ParseError(f"{path}:1: no data columns in header")
    ids = []
    data = []
    for lineno, ln in enumerate(lines[1:], start=2):
        fields = ln.split("\t")
        if len(fields) != len(header):
            raise ParseError(
                f"{path}:{lineno}: expected {len(header)} fields, found {len(fields)}"
            )
        ids.append(fields[0])
        try:
            data.append([float(tok) for tok in fields[1:]])
        except ValueError:
            raise ParseError(f"{path}:{lineno}: non-numeric value in data columns") from None
    arr = np.asarray(data)
    return PhenotypeData(
        columns={name: arr[:, j] for j, name in enumerate(names)},
        sample_ids=tuple(ids),
    )


def parse_gene_sets(path):
    """Gene-set definitions, one per line: ``name<TAB>snp1,snp2,...``."""
    genes = []
    seen = set()
    for lineno, ln in enumerate(_read_lines(path), start=1):
        if not ln.strip() or ln.startswith("#"):
            continue
        parts = ln.split("\t")
        if len(parts) != 2:
            raise ParseError(f"{path}:{lineno}: expected 'gene<TAB>snp,snp,...'")
        name = parts[0].strip()
        if name in seen:
            raise ParseError(f"{path}:{lineno}: duplicate gene name {name!r}")
        seen.add(name)
        snps = tuple(s.strip() for s in parts[1].split(",") if s.strip())
        try:
            genes.append(GeneSetDefinition(gene_name=name, snp_ids=snps))
        except ParseError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
    if not genes:
        raise ParseError(f"{path}: no gene definitions found")
    return genes


@dataclass(frozen=True)
class ResultRow:
    gene: str
    n: int
    L: int
    T: float
    p_davies: float
    p_liu: float
    tau_hat: float
    sigma_hat: float
    em_iters: int
    converged: bool
    status: str


def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "NA"
    return f"{x:.5e}"


def write_results(rows, path):
    """Serialize result rows; byte-stable for identical inputs."""
    try:
        with open(path, "w") as fh:
            fh.write("\t".join(RESULT_HEADER) + "\n")
            for r in rows:
                fh.write(
                    "\t".join(
                        [
                            r.gene,
                            str(r.n),
                            str(r.L),
                            _fmt(r.T),
                            _fmt(r.p_davies),
                            _fmt(r.p_liu),
                            _fmt(r.tau_hat),
                            _fmt(r.sigma_hat),
                            str(r.em_iters),
                            "true" if r.converged else "false",
                            r.status,
                        ]
                    )
                    + "\n"
                )
    except OSError as exc:
        raise ParseError(f"cannot write results to {path}: {exc}") from exc


def align_samples(geno, pheno):
    """Inner join on sample id, genotype order canonical; returns index pairs."""
    pheno_pos = {sid: i for i, sid in enumerate(pheno.sample_ids)}
    g_idx, p_idx = [], []
    for i, sid in enumerate(geno.sample_ids):
        if sid in pheno_pos:
            g_idx.append(i)
            p_idx.append(pheno_pos[sid])
    if not g_idx:
        raise ParseError("no overlapping sample ids between genotype and phenotype files")
    return np.asarray(g_idx), np.asarray(p_idx)


def _test_one_gene(gene, geno, col_of, y, X, env, g_idx, manifest):
    try:
        missing = [s for s in gene.snp_ids if s not in col_of]
        if missing:
            raise ParseError(
                f"gene {gene.gene_name!r}: SNP ids not in genotype header: {missing}"
            )
        cols = [col_of[s] for s in gene.snp_ids]
        G = geno.matrix[np.ix_(g_idx, cols)]
        inp = build_input(y, X, env, G)
        res = run_test(inp, manifest.em, davies_acc=manifest.davies_acc)
        return ResultRow(
            gene=gene.gene_name,
            n=len(y),
            L=len(cols),
            T=res.statistic_T,
            p_davies=res.p_davies,
            p_liu=res.p_liu,
            tau_hat=res.tau_hat,
            sigma_hat=res.sigma_hat,
            em_iters=res.n_iter,
            converged=res.converged,
            status=res.status,
        )
    except SeagleError as exc:
        log.warning("gene %s failed: %s", gene.gene_name, exc)
        return ResultRow(
            gene=gene.gene_name,
            n=len(y),
            L=len(gene.snp_ids),
            T=float("nan"),
            p_davies=float("nan"),
            p_liu=float("nan"),
            tau_hat=float("nan"),
            sigma_hat=float("nan"),
            em_iters=0,
            converged=False,
            status=f"error:{type(exc).__name__}",
        )


def run_batch(manifest):
    """Test every gene set in the manifest; returns the rows it wrote.

    Per-gene numerical failures become rows with an error status; only an
    empty sample intersection or unreadable input is fatal.
    """
    geno = parse_genotypes(manifest.genotypes, manifest.format)
    pheno = parse_phenotypes(manifest.pheno)
    for col in (manifest.pheno_col, manifest.env_col, *manifest.covar_cols):
        if col not in pheno.columns:
            raise ParseError(f"column {col!r} not found in {manifest.pheno}")
    g_idx, p_idx = align_samples(geno, pheno)
    y = pheno.columns[manifest.pheno_col][p_idx]
    env = pheno.columns[manifest.env_col][p_idx]
    covars = [pheno.columns[c][p_idx] for c in manifest.covar_cols]
    X = np.column_stack([np.ones(len(y)), *covars, env])

    if manifest.genes is not None:
        genes = parse_gene_sets(manifest.genes)
    else:
        genes = [GeneSetDefinition(gene_name="all", snp_ids=geno.snp_ids)]
    col_of = {s: j for j, s in enumerate(geno.snp_ids)}

    work = lambda gene: _test_one_gene(gene, geno, col_of, y, X, env, g_idx, manifest)
    if manifest.threads > 1:
        with ThreadPoolExecutor(max_workers=manifest.threads) as pool:
            rows = list(pool.map(work, genes))
    else:
        rows = [work(g) for g in genes]
    write_results(rows, manifest.out)
    return rows
