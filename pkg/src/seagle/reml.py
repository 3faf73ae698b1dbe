"""REML EM estimation of the nuisance variance components (tau, sigma).

The null model is ``y = X beta + G b + eps`` with ``b ~ N(0, tau I_L)`` and
``eps ~ N(0, sigma I_n)``. Working with ``u = A'y`` removes beta from the
likelihood; each EM step solves against
``R = tau (A'G)(A'G)' + sigma I_{n-P}`` through a Woodbury operator built on
A'G, so no iteration touches an (n-P) x (n-P) matrix.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalError, ParameterError, ShapeError
from .linalg import apply_at, apply_vinv, build_projector, build_woodbury

# Column-block cap (entries) for the trace term, keeps temporaries bounded.
_BLOCK_ENTRIES = 1 << 23


@dataclass(frozen=True)
class EmConfig:
    """EM configuration.

    ``tau0``/``sigma0`` default to a data-driven start: sigma0 is the
    residual variance ``|u|^2 / (n - P)`` and tau0 = sigma0 / L. The explicit
    values, when given, must exceed ``floor``.
    """

    tau0: float | None = None
    sigma0: float | None = None
    rel_tol: float = 1e-5
    max_iter: int = 500
    floor: float = 1e-10
    keep_trajectory: bool = False

    def __post_init__(self):
        if not (0.0 < self.rel_tol < 1.0):
            raise ParameterError(f"rel_tol must be in (0, 1), got {self.rel_tol}")
        if self.max_iter < 1:
            raise ParameterError(f"max_iter must be >= 1, got {self.max_iter}")
        if not (self.floor > 0.0):
            raise ParameterError(f"floor must be positive, got {self.floor}")
        for name, v in (("tau0", self.tau0), ("sigma0", self.sigma0)):
            if v is not None and not (v > self.floor):
                raise ParameterError(f"{name} must exceed floor={self.floor}, got {v}")


@dataclass(frozen=True)
class NullFit:
    """Result of the null-model variance-component fit."""

    tau_hat: float
    sigma_hat: float
    n_iter: int
    converged: bool
    trajectory: tuple | None = None


def project_response(proj, y):
    """``u = A'y``, the response projected onto the complement of range(X)."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] != proj.n:
        raise ShapeError(f"y must be a length-{proj.n} vector, got shape {y.shape}")
    return apply_at(proj, y)


def em_step(u, AtG, tau_t, sigma_t):
    """One EM update of (tau, sigma).

    Builds the Woodbury operator for R once (one Cholesky), reuses it for
    both R^-1 u and R^-1 A'G, and accumulates the trace term
    ``tr(G'A R^-1 A'G)`` as the entrywise-product sum over column blocks.
    """
    m, L = AtG.shape
    op = build_woodbury(AtG, tau_t, sigma_t)
    r_u = apply_vinv(op, u)
    gar_u = AtG.T @ r_u
    tr = 0.0
    block = max(1, _BLOCK_ENTRIES // max(m, 1))
    for j0 in range(0, L, block):
        blk = AtG[:, j0 : j0 + block]
        tr += float(np.sum(blk * apply_vinv(op, blk)))
    tau_next = (tau_t / L) * (tau_t * float(gar_u @ gar_u) + (L - tau_t * tr))
    # sigma: E|u - A'G b|^2 / (n-P) with the conditional moments plugged in;
    # note the squared sigma_t inside the first term.
    sigma_next = (sigma_t / m) * (sigma_t * float(r_u @ r_u) + tau_t * tr)
    if not (math.isfinite(tau_next) and math.isfinite(sigma_next)):
        raise NumericalError(
            f"non-finite EM update from (tau={tau_t}, sigma={sigma_t}): "
            f"({tau_next}, {sigma_next})"
        )
    return tau_next, sigma_next


def initial_values(u, L, cfg):
    """Starting point (tau0, sigma0) given the projected response."""
    m = u.shape[0]
    sigma0 = cfg.sigma0 if cfg.sigma0 is not None else max(float(u @ u) / m, cfg.floor)
    tau0 = cfg.tau0 if cfg.tau0 is not None else max(sigma0 / L, cfg.floor)
    return tau0, sigma0


def fit_null(y, G, X, cfg=None):
    """Iterate :func:`em_step` until the relative-change criterion or max_iter.

    ``A'G`` and ``A'y`` are computed once up front. Iterates are clamped at
    ``cfg.floor`` so R stays positive definite; convergence compares the
    relative change of both components against ``cfg.rel_tol``.
    """
    cfg = cfg or EmConfig()
    G = np.asarray(G, dtype=np.float64)
    proj = build_projector(X)
    u = project_response(proj, y)
    AtG = apply_at(proj, G)
    L = G.shape[1]

    tau, sigma = initial_values(u, L, cfg)
    traj = [(tau, sigma)] if cfg.keep_trajectory else None
    converged = False
    n_iter = 0
    for _ in range(cfg.max_iter):
        tau_next, sigma_next = em_step(u, AtG, tau, sigma)
        tau_next = max(tau_next, cfg.floor)
        sigma_next = max(sigma_next, cfg.floor)
        n_iter += 1
        delta = max(
            abs(tau_next - tau) / max(tau, cfg.floor),
            abs(sigma_next - sigma) / max(sigma, cfg.floor),
        )
        tau, sigma = tau_next, sigma_next
        if traj is not None:
            traj.append((tau, sigma))
        if delta < cfg.rel_tol:
            converged = True
            break
    return NullFit(
        tau_hat=tau,
        sigma_hat=sigma,
        n_iter=n_iter,
        converged=converged,
        trajectory=tuple(traj) if traj is not None else None,
    )
