"""Symmetric low-rank DPP baseline (``L = V V^T``), computed independently.

This path uses Cholesky factorizations and the dual normalizer
``det(I_M + V V^T) = det(I_D + V^T V)``. It shares no code with the
nonsymmetric path, so agreement between the two at ``B = C = 0`` is a real check.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .kernel import DEFAULT_EPSILON, LOG_SENTINEL


def _reg_weights(lam, M):
    if lam is None:
        return np.ones(M)
    lam = np.asarray(lam, dtype=np.float64)
    return 1.0 / np.maximum(lam, 1.0)


def _chol_logdet(X):
    c, low = cho_factor(X, lower=True)
    return 2.0 * np.sum(np.log(np.diag(c))), (c, low)


def log_likelihood(V, baskets, alpha=0.0, lam=None, epsilon=DEFAULT_EPSILON, mean=False):
    """``sum_i log P(Y_i)`` (or the mean) minus ``alpha sum ||v_i||^2 / lam_i``."""
    V = np.asarray(V, dtype=np.float64)
    M, D = V.shape
    logZ, _ = _chol_logdet(np.eye(D) + V.T @ V)
    total = 0.0
    for Y in baskets:
        VY = V[list(Y)]
        try:
            ld, _ = _chol_logdet(VY @ VY.T + epsilon * np.eye(len(Y)))
        except LinAlgError:
            ld = LOG_SENTINEL
        total += ld - logZ
    if mean:
        total /= len(baskets)
    w = _reg_weights(lam, M)
    return total - alpha * float(np.sum(w * np.sum(V * V, axis=1)))


def gradient(V, baskets, alpha=0.0, lam=None, epsilon=DEFAULT_EPSILON, mean=False):
    """``d/dV`` of :func:`log_likelihood`."""
    V = np.asarray(V, dtype=np.float64)
    M, D = V.shape
    G = np.zeros_like(V)
    for Y in baskets:
        Y = list(Y)
        VY = V[Y]
        try:
            _, fac = _chol_logdet(VY @ VY.T + epsilon * np.eye(len(Y)))
        except LinAlgError:
            continue
        G[Y] += 2.0 * cho_solve(fac, VY)
    _, fac = _chol_logdet(np.eye(D) + V.T @ V)
    G -= 2.0 * len(baskets) * cho_solve(fac, V.T).T
    if mean:
        G /= len(baskets)
    w = _reg_weights(lam, M)
    return G - 2.0 * alpha * w[:, None] * V


def next_item_scores(V, J, epsilon=0.0):
    """Diagonal of the conditional kernel: ``L_ii - l_i^T L_J^{-1} l_i`` for ``i`` not in ``J``.

    Returns ``(items, scores)``.
    """
    V = np.asarray(V, dtype=np.float64)
    M = V.shape[0]
    J = sorted(J)
    rest = np.setdiff1d(np.arange(M), J)
    VJ, VR = V[J], V[rest]
    _, fac = _chol_logdet(VJ @ VJ.T + epsilon * np.eye(len(J)))
    cross = VR @ VJ.T  # L_{rest, J}
    diag = np.sum(VR * VR, axis=1)
    return rest, diag - np.sum(cross * cho_solve(fac, cross.T).T, axis=1)
