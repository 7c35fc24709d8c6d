"""Full-batch Adam training of low-rank nonsymmetric DPP kernels."""
from __future__ import annotations

import logging
import struct
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import likelihood
from .data import BasketDataset
from .errors import ConfigurationError, DataError, NumericalError
from .kernel import DEFAULT_EPSILON, LowRankParams, assemble_L

log = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"NSDPP1"


@dataclass(frozen=True)
class TrainConfig:
    D: Optional[int] = None  # None -> largest observed basket size
    D_prime: Optional[int] = None  # None -> same as D
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    epsilon: float = DEFAULT_EPSILON
    learning_rate: float = 0.05
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    max_epochs: int = 1000
    convergence_rel_tol: float = 1e-4
    seed: int = 0
    init_scale: float = 0.1
    mean_mode: bool = True
    symmetric_only: bool = False

    def __post_init__(self):
        for name in ("epsilon", "adam_eps", "convergence_rel_tol"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.learning_rate < 0 or self.init_scale < 0:
            raise ConfigurationError("learning_rate and init_scale must be nonnegative")
        if self.D is not None and self.D < 1:
            raise ConfigurationError("D must be >= 1")
        if (self.D_prime is not None and self.D_prime < 0) or self.max_epochs < 0:
            raise ConfigurationError("D_prime and max_epochs must be nonnegative")

    def resolve_rank(self, dataset: BasketDataset) -> "TrainConfig":
        """Fill in ``D`` from the largest basket and ``D_prime`` from ``D`` when unset."""
        D = dataset.max_basket_size if self.D is None else self.D
        return replace(self, D=D, D_prime=D if self.D_prime is None else self.D_prime)

    @property
    def regularization(self):
        return dict(alpha=self.alpha, beta=self.beta, gamma=self.gamma)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    validation_loglik: float
    grad_norm: float
    wall_time: float


@dataclass
class TrainTrace:
    epochs: list = field(default_factory=list)
    final_params: Optional[LowRankParams] = None
    converged: bool = False

    @property
    def epochs_run(self) -> int:
        return len(self.epochs)

    def to_tsv(self, path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            fh.write("epoch\ttrain_loss\tvalidation_loglik\tgrad_norm\twall_time\n")
            for r in self.epochs:
                fh.write(f"{r.epoch}\t{r.train_loss!r}\t{r.validation_loglik!r}\t"
                         f"{r.grad_norm!r}\t{r.wall_time:.6f}\n")


def init_params(cfg: TrainConfig, M: int) -> LowRankParams:
    """Uniform ``[-init_scale, init_scale]`` entries from ``default_rng(seed)``."""
    if M < 1:
        raise ConfigurationError("M must be >= 1")
    if cfg.D is None or cfg.D_prime is None:
        raise ConfigurationError("ranks must be resolved before initialization")
    rng = np.random.default_rng(cfg.seed)
    s = cfg.init_scale
    V = rng.uniform(-s, s, size=(M, cfg.D))
    B = rng.uniform(-s, s, size=(M, cfg.D_prime))
    C = rng.uniform(-s, s, size=(M, cfg.D_prime))
    if cfg.symmetric_only:
        B, C = np.zeros_like(B), np.zeros_like(C)
    return LowRankParams(V, B, C)


class Adam:
    """Adam ascent on a list of arrays (maximizes the objective)."""

    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = None
        self.v = None

    def step(self, params, grads):
        if self.m is None:
            self.m = [np.zeros_like(g) for g in grads]
            self.v = [np.zeros_like(g) for g in grads]
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        out = []
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            mhat = m / (1 - b1 ** self.t)
            vhat = v / (1 - b2 ** self.t)
            out.append(p + self.lr * mhat / (np.sqrt(vhat) + self.eps))
        return out


GradientFn = Callable[..., tuple]


def fit(cfg: TrainConfig, dataset: BasketDataset, params: LowRankParams | None = None,
        gradient_fn: GradientFn | None = None) -> TrainTrace:
    """Train on ``dataset.train``; stop on relative validation change or ``max_epochs``.

    ``gradient_fn`` defaults to :func:`likelihood.loss_and_gradients` and exists
    so tests can instrument the call.
    """
    train, val = dataset.train, dataset.validation
    if not train or not val:
        raise DataError("training needs nonempty train and validation splits")
    cfg = cfg.resolve_rank(dataset)
    gradient_fn = gradient_fn or likelihood.loss_and_gradients
    reg = likelihood.RegularizationConfig(cfg.alpha, cfg.beta, cfg.gamma, dataset.lam)
    if params is None:
        params = init_params(cfg, dataset.M)
    opt = Adam(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)

    trace = TrainTrace()
    prev_val = likelihood.mean_log_prob(assemble_L(params), val, cfg.epsilon)
    t0 = time.perf_counter()
    for epoch in range(1, cfg.max_epochs + 1):
        report, grads = gradient_fn(params, train, reg, cfg.epsilon, cfg.mean_mode)
        gnorm = float(np.sqrt(sum(np.sum(g * g) for g in grads)))
        if not np.isfinite(report.total) or not np.isfinite(gnorm):
            raise NumericalError(
                f"non-finite loss at epoch {epoch} (loss={report.total}, grad norm={gnorm})")
        dV, dB, dC = grads
        if cfg.symmetric_only:
            dB, dC = np.zeros_like(dB), np.zeros_like(dC)
        V, B, C = opt.step([params.V, params.B, params.C], [dV, dB, dC])
        params = LowRankParams(V, B, C)
        val_ll = likelihood.mean_log_prob(assemble_L(params), val, cfg.epsilon)
        if not np.isfinite(val_ll):
            raise NumericalError(f"non-finite validation log-likelihood at epoch {epoch} "
                                 f"(grad norm={gnorm})")
        trace.epochs.append(EpochRecord(epoch, -report.total, val_ll, gnorm,
                                        time.perf_counter() - t0))
        rel = abs(val_ll - prev_val) / max(abs(prev_val), np.finfo(float).tiny)
        prev_val = val_ll
        if rel <= cfg.convergence_rel_tol:
            trace.converged = True
            break
    trace.final_params = params
    log.info("trained %d epochs (converged=%s)", trace.epochs_run, trace.converged)
    return trace


# checkpoint layout: magic, then little-endian uint64 M, D, D', then V, B, C as row-major <f8
def save_checkpoint(params: LowRankParams, path) -> None:
    with Path(path).open("wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<QQQ", params.M, params.D, params.D_prime))
        for a in (params.V, params.B, params.C):
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes(order="C"))


def load_checkpoint(path) -> LowRankParams:
    raw = Path(path).read_bytes()
    n = len(CHECKPOINT_MAGIC)
    if raw[:n] != CHECKPOINT_MAGIC:
        raise DataError(f"{path}: not a model checkpoint (bad magic)")
    M, D, Dp = struct.unpack_from("<QQQ", raw, n)
    off = n + 24
    sizes = (M * D, M * Dp, M * Dp)
    if len(raw) != off + 8 * sum(sizes):
        raise DataError(f"{path}: truncated or oversized checkpoint")
    arrays = []
    for size, cols in zip(sizes, (D, Dp, Dp)):
        a = np.frombuffer(raw, dtype="<f8", count=size, offset=off).reshape(M, cols)
        arrays.append(a.astype(np.float64))
        off += 8 * size
    return LowRankParams(*arrays)
