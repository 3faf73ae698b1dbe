"""Matrix-free primitives.

Two operators that never materialize an n x n matrix:

* :class:`WoodburyOperator` multiplies by the inverse of the low-rank-plus-
  diagonal covariance ``tau * G G' + sigma * I_n`` through an L x L Cholesky
  factor (Sherman-Morrison-Woodbury).
* :class:`ImplicitProjector` applies the orthogonal complement basis A of the
  covariate design through the Householder reflectors of a QR factorization,
  so that ``A A' = I - X (X'X)^-1 X'`` without ever forming A densely.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .exceptions import ConditioningError, ParameterError, RankError, ShapeError

# Rank-deficiency threshold on the min/max ratio of |diag(R0)|.
RANK_TOL = 1e-10


def chol_lower(mat, label):
    """Lower Cholesky factor of a symmetric matrix, with a domain-specific error.

    All factorizations in the package go through this helper so tests can
    count them.
    """
    try:
        return sla.cholesky(mat, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(
            f"{label} is not numerically positive definite: {exc}"
        ) from exc


@dataclass(frozen=True)
class WoodburyOperator:
    """Factored representation of ``(tau * G G' + sigma * I_n)^-1``.

    Immutable after construction; the cached Cholesky factor of
    ``M = I_L + (tau/sigma) G'G`` is reused by every :func:`apply_vinv` call.
    """

    G: np.ndarray
    tau: float
    sigma: float
    chol_M: np.ndarray

    @property
    def n(self):
        return self.G.shape[0]

    @property
    def L(self):
        return self.G.shape[1]


def build_woodbury(G, tau, sigma):
    """Build a :class:`WoodburyOperator` for ``V = tau * G G' + sigma * I_n``.

    Costs O(n L^2 + L^3); the resulting factor is valid for any number of
    subsequent applications at this (tau, sigma).
    """
    G = np.asarray(G, dtype=np.float64)
    if G.ndim != 2 or G.shape[0] < 1 or G.shape[1] < 1:
        raise ShapeError(f"G must be a nonempty 2-d matrix, got shape {G.shape}")
    if not (tau > 0.0):
        raise ParameterError(f"tau must be positive, got {tau}")
    if not (sigma > 0.0):
        raise ParameterError(f"sigma must be positive, got {sigma}")
    if not np.isfinite(G).all():
        raise ParameterError("G contains non-finite entries")
    L = G.shape[1]
    M = np.eye(L) + (tau / sigma) * (G.T @ G)
    chol_M = chol_lower(M, "M = I + (tau/sigma) G'G")
    return WoodburyOperator(G=G, tau=float(tau), sigma=float(sigma), chol_M=chol_M)


def apply_vinv(op, W):
    """Compute ``V^-1 W`` without forming any n x n matrix.

    Evaluates ``(1/sigma) [W - (tau/sigma) G M^-1 G' W]`` with two triangular
    solves against the cached factor. Accepts a vector or a matrix with n rows
    and returns the same shape.
    """
    W = np.asarray(W, dtype=np.float64)
    vec = W.ndim == 1
    if W.shape[0] != op.n:
        raise ShapeError(
            f"W has {W.shape[0]} rows but the operator dimension is {op.n}"
        )
    GtW = op.G.T @ W
    X2 = sla.cho_solve((op.chol_M, True), GtW)
    out = (W - (op.tau / op.sigma) * (op.G @ X2)) / op.sigma
    return out if not vec else np.asarray(out).reshape(-1)


@dataclass(frozen=True)
class ImplicitProjector:
    """Factored full QR of the covariate design X (n x P).

    ``reflectors`` and ``householder_tau`` hold the LAPACK-layout Householder
    vectors; ``r0`` is the P x P upper-triangular factor. Q is only ever
    applied, never formed.
    """

    reflectors: np.ndarray
    householder_tau: np.ndarray
    r0: np.ndarray
    n: int
    p_cols: int


def build_projector(X):
    """Factored full QR of X; raises :class:`RankError` if X is rank deficient."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"X must be 2-d, got shape {X.shape}")
    n, P = X.shape
    if not (n > P >= 1):
        raise ShapeError(f"need n > P >= 1, got n={n}, P={P}")
    (qr_raw, h_tau), r0 = sla.qr(X, mode="raw")
    r0 = np.ascontiguousarray(r0[:P, :P])
    d = np.abs(np.diag(r0))
    if d.min() < RANK_TOL * d.max():
        raise RankError(
            f"covariate design is numerically rank deficient: column "
            f"{int(np.argmin(d))} has |R| diagonal ratio "
            f"{d.min() / d.max():.3e} < {RANK_TOL:.0e}"
        )
    return ImplicitProjector(
        reflectors=qr_raw,
        householder_tau=h_tau,
        r0=r0,
        n=n,
        p_cols=P,
    )


def _check_rows(proj, W):
    if W.shape[0] != proj.n:
        raise ShapeError(
            f"W has {W.shape[0]} rows but the projector dimension is {proj.n}"
        )


def apply_qt(proj, W):
    """Multiply by Q' (the full orthogonal factor, transposed), O(nPl)."""
    W = np.asarray(W, dtype=np.float64)
    vec = W.ndim == 1
    if vec:
        W = W[:, None]
    _check_rows(proj, W)
    W = W.copy()
    for j in range(proj.p_cols):
        v = proj.reflectors[j + 1 :, j]
        t = proj.householder_tau[j]
        s = W[j] + v @ W[j + 1 :]
        W[j] -= t * s
        W[j + 1 :] -= t * np.outer(v, s)
    return W[:, 0] if vec else W


def apply_q(proj, W):
    """Multiply by Q, the inverse operation of :func:`apply_qt`."""
    W = np.asarray(W, dtype=np.float64)
    vec = W.ndim == 1
    if vec:
        W = W[:, None]
    _check_rows(proj, W)
    W = W.copy()
    for j in range(proj.p_cols - 1, -1, -1):
        v = proj.reflectors[j + 1 :, j]
        t = proj.householder_tau[j]
        s = W[j] + v @ W[j + 1 :]
        W[j] -= t * s
        W[j + 1 :] -= t * np.outer(v, s)
    return W[:, 0] if vec else W


def apply_at(proj, W):
    """Compute ``A' W``: apply Q' and keep the trailing n - P rows."""
    out = apply_qt(proj, W)
    return out[proj.p_cols :]


def apply_a(proj, Z):
    """Compute ``A Z``, mapping length n - P back into sample space."""
    Z = np.asarray(Z, dtype=np.float64)
    vec = Z.ndim == 1
    if vec:
        Z = Z[:, None]
    if Z.shape[0] != proj.n - proj.p_cols:
        raise ShapeError(
            f"Z has {Z.shape[0]} rows, expected n - P = {proj.n - proj.p_cols}"
        )
    W = np.vstack([np.zeros((proj.p_cols, Z.shape[1])), Z])
    out = apply_q(proj, W)
    return out[:, 0] if vec else out
