"""Dense O(n^3) reference implementation of the original VC test.

Deliberately naive: V, V^-1, P and the complement basis A are all formed
explicitly. This is the ground truth the fast path is checked against at
small n. Truncation thresholds and the EM convergence rule are shared with
the fast modules so comparisons isolate algorithmic equivalence.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .exceptions import ParameterError
from .reml import EmConfig, NullFit, initial_values
from .vctest import EIG_ABS_FLOOR, EIG_REL_FLOOR

# Guard against accidentally running the dense path at scale.
MAX_DENSE_N = 2000


def _check_n(n):
    if n > MAX_DENSE_N:
        raise ParameterError(
            f"dense oracle is limited to n <= {MAX_DENSE_N}, got n={n}"
        )


@dataclass(frozen=True)
class DenseNullModel:
    """Explicitly formed V, V^-1, P and complement basis A."""

    V: np.ndarray
    Vinv: np.ndarray
    P_mat: np.ndarray
    A_dense: np.ndarray


def dense_null_model(G, X, tau, sigma):
    G = np.asarray(G, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    n, P = X.shape
    _check_n(n)
    V = tau * (G @ G.T) + sigma * np.eye(n)
    Vinv = np.linalg.inv(V)
    VX = Vinv @ X
    P_mat = Vinv - VX @ np.linalg.solve(X.T @ VX, VX.T)
    Q, _ = sla.qr(X)
    return DenseNullModel(V=V, Vinv=Vinv, P_mat=P_mat, A_dense=Q[:, P:])


def dense_statistic(inp, tau, sigma):
    """T and the score vector from explicitly formed P."""
    _check_n(inp.y.shape[0])
    model = dense_null_model(inp.G, inp.X, tau, sigma)
    t = inp.Gt.T @ (model.P_mat @ inp.y)
    return 0.5 * float(t @ t), t


def dense_eigen_weights(inp, tau, sigma):
    """Eigenvalues of the n x n matrix C1 C1' with a dense symmetric V^1/2."""
    n = inp.y.shape[0]
    _check_n(n)
    model = dense_null_model(inp.G, inp.X, tau, sigma)
    w, Q = np.linalg.eigh(model.V)
    vhalf = (Q * np.sqrt(np.maximum(w, 0.0))) @ Q.T
    C1 = vhalf @ model.P_mat @ inp.Gt / np.sqrt(2.0)
    eigs = np.linalg.eigvalsh(C1 @ C1.T)[::-1]
    if eigs.size == 0 or eigs[0] <= EIG_ABS_FLOOR:
        return np.empty(0)
    return eigs[eigs > max(EIG_ABS_FLOOR, EIG_REL_FLOOR * eigs[0])]


def dense_em_fit(y, G, X, cfg=None):
    """REML EM with a dense A and an explicit solve against R each iteration.

    Same initialization, clamping, and convergence rule as the fast fit.
    """
    cfg = cfg or EmConfig()
    y = np.asarray(y, dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    n, P = X.shape
    _check_n(n)
    Q, _ = sla.qr(X)
    A = Q[:, P:]
    u = A.T @ y
    AtG = A.T @ G
    m, L = AtG.shape
    K = AtG @ AtG.T

    tau, sigma = initial_values(u, L, cfg)
    traj = [(tau, sigma)] if cfg.keep_trajectory else None
    converged = False
    n_iter = 0
    for _ in range(cfg.max_iter):
        R = tau * K + sigma * np.eye(m)
        r_u = np.linalg.solve(R, u)
        r_AtG = np.linalg.solve(R, AtG)
        gar_u = AtG.T @ r_u
        tr = float(np.sum(AtG * r_AtG))
        tau_next = (tau / L) * (tau * float(gar_u @ gar_u) + (L - tau * tr))
        sigma_next = (sigma / m) * (sigma * float(r_u @ r_u) + tau * tr)
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
