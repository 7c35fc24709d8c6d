"""Regularized log-likelihood of a low-rank nonsymmetric DPP and its gradient.

The objective over training baskets ``Y_1..Y_n`` is::

    phi = sum_i [log det(L_{Y_i} + eps I) - log det(L + I)] + R(V, B, C)

with ``R = -alpha sum_i ||v_i||^2 / lam_i - beta sum_i ||b_i||^2 / lam_i
- gamma sum_i ||c_i||^2 / lam_i``.  ``mean=True`` divides the data term by n.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DegenerateTrainingError, NumericalError
from .kernel import (DEFAULT_EPSILON, LOG_SENTINEL, LowRankParams, as_matrix,
                     assemble_L)


@dataclass(frozen=True)
class RegularizationConfig:
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    lam: np.ndarray | None = None  # per-item occurrence counts

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be nonnegative")

    def inverse_counts(self, M: int) -> np.ndarray:
        """``1 / lam_i``, with unseen items (count 0 or no counts) weighted 1."""
        if self.lam is None:
            return np.ones(M)
        lam = np.asarray(self.lam, dtype=np.float64)
        if lam.shape != (M,):
            raise ConfigurationError(f"lam has shape {lam.shape}, expected ({M},)")
        return 1.0 / np.where(lam >= 1, lam, 1.0)


@dataclass(frozen=True)
class LossReport:
    data_loglik: float
    regularizer: float
    total: float
    per_basket: np.ndarray = field(repr=False)
    singular_basket_flags: np.ndarray = field(repr=False)


def regularizer(params: LowRankParams, cfg: RegularizationConfig) -> float:
    w = cfg.inverse_counts(params.M)
    out = 0.0
    for coef, F in ((cfg.alpha, params.V), (cfg.beta, params.B), (cfg.gamma, params.C)):
        if coef:
            out -= coef * float(w @ np.sum(F * F, axis=1))
    return out


def _regularizer_grads(params, cfg):
    w = cfg.inverse_counts(params.M)[:, None]
    return (-2.0 * cfg.alpha * w * params.V,
            -2.0 * cfg.beta * w * params.B,
            -2.0 * cfg.gamma * w * params.C)


def _check_baskets(baskets, M):
    if len(baskets) == 0:
        raise ConfigurationError("no baskets given")
    for b in baskets:
        if len(b) == 0:
            raise ConfigurationError("empty basket")
        if min(b) < 0 or max(b) >= M:
            raise ConfigurationError(f"basket {list(b)} has items outside [0, {M})")


def group_by_size(baskets: Sequence[Sequence[int]]) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """``size -> (positions in input order, index array of shape (n_k, size))``."""
    groups = defaultdict(list)
    for pos, b in enumerate(baskets):
        groups[len(b)].append(pos)
    out = {}
    for k in sorted(groups):
        pos = np.array(groups[k], dtype=np.intp)
        idx = np.array([sorted(baskets[p]) for p in pos], dtype=np.intp).reshape(len(pos), k)
        out[k] = (pos, idx)
    return out


def _blocks(L, idx, epsilon):
    return L[idx[:, :, None], idx[:, None, :]] + epsilon * np.eye(idx.shape[1])


def basket_logdets(L, baskets, epsilon: float = DEFAULT_EPSILON):
    """Stabilized ``log det(L_Y + eps I)`` per basket plus a nonpositivity flag.

    Flagged baskets carry ``LOG_SENTINEL``.
    """
    L = as_matrix(L)
    out = np.empty(len(baskets))
    flags = np.zeros(len(baskets), dtype=bool)
    for k, (pos, idx) in group_by_size(baskets).items():
        sign, logdet = np.linalg.slogdet(_blocks(L, idx, epsilon))
        bad = (sign <= 0) | ~np.isfinite(logdet)
        out[pos] = np.where(bad, LOG_SENTINEL, logdet)
        flags[pos] = bad
    return out, flags


def _normalizer(L):
    sign, logdet = np.linalg.slogdet(L + np.eye(L.shape[0]))
    if sign <= 0:
        raise NumericalError("det(L + I) is nonpositive")
    return float(logdet)


def log_likelihood(params: LowRankParams, baskets, cfg: RegularizationConfig | None = None,
                   epsilon: float = DEFAULT_EPSILON, mean: bool = False) -> LossReport:
    cfg = cfg or RegularizationConfig()
    _check_baskets(baskets, params.M)
    L = assemble_L(params).entries
    logdets, flags = basket_logdets(L, baskets, epsilon)
    if flags.all():
        raise DegenerateTrainingError(
            f"all {len(baskets)} baskets have nonpositive stabilized minors")
    per_basket = logdets - _normalizer(L)
    data = float(np.sum(per_basket))
    if mean:
        data /= len(baskets)
    reg = regularizer(params, cfg)
    return LossReport(data, reg, data + reg, per_basket, flags)


def kernel_gradient(L, baskets, epsilon: float = DEFAULT_EPSILON, mean: bool = False):
    """Gradient of the data term with respect to the entries of ``L``.

    Returns ``(W, flags)`` where ``W = sum_Y embed((L_Y + eps I)^{-T}) - n (L + I)^{-T}``.
    Sentinel baskets contribute only through the normalizer.
    """
    L = as_matrix(L)
    M = L.shape[0]
    W = np.zeros((M, M))
    flags = np.zeros(len(baskets), dtype=bool)
    for k, (pos, idx) in group_by_size(baskets).items():
        blocks = _blocks(L, idx, epsilon)
        sign, logdet = np.linalg.slogdet(blocks)
        ok = (sign > 0) & np.isfinite(logdet)
        flags[pos[~ok]] = True
        if not ok.any():
            continue
        G = np.linalg.inv(blocks[ok]).transpose(0, 2, 1)
        sub = idx[ok]
        np.add.at(W, (sub[:, :, None], sub[:, None, :]), G)
    W -= len(baskets) * np.linalg.inv(L + np.eye(M)).T
    if mean:
        W /= len(baskets)
    return W, flags


def factor_gradients(params: LowRankParams, W: np.ndarray):
    """Chain rule from ``dphi/dL = W`` to the factors of ``L = VV^T + BC^T - CB^T``."""
    Wsym = W + W.T
    Wskew = W - W.T
    return Wsym @ params.V, Wskew @ params.C, -Wskew @ params.B


def gradients(params: LowRankParams, baskets, cfg: RegularizationConfig | None = None,
              epsilon: float = DEFAULT_EPSILON, mean: bool = False):
    """Analytic ``(dV, dB, dC)`` of ``LossReport.total``."""
    return loss_and_gradients(params, baskets, cfg, epsilon, mean)[1]


def loss_and_gradients(params: LowRankParams, baskets, cfg: RegularizationConfig | None = None,
                       epsilon: float = DEFAULT_EPSILON, mean: bool = False):
    cfg = cfg or RegularizationConfig()
    report = log_likelihood(params, baskets, cfg, epsilon, mean)
    W, _ = kernel_gradient(assemble_L(params).entries, baskets, epsilon, mean)
    dV, dB, dC = factor_gradients(params, W)
    rV, rB, rC = _regularizer_grads(params, cfg)
    return report, (dV + rV, dB + rB, dC + rC)


def mean_log_prob(L, baskets, epsilon: float = DEFAULT_EPSILON) -> float:
    """Average per-basket log-probability; used for validation tracking."""
    L = as_matrix(L)
    logdets, _ = basket_logdets(L, baskets, epsilon)
    return float(np.mean(logdets) - _normalizer(L))
