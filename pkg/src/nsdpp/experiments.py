"""Preset experiment protocols: synthetic regimes, the three-group correlation study, real-data configs."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import data, evaluation, synthetic, trainer
from .errors import ConfigurationError
from .kernel import assemble_L, marginal_kernel

# Hyperparameters for the real-data benchmarks; beta = gamma = 0 throughout.
PRESETS = {
    "amazon-apparel": trainer.TrainConfig(D=30, D_prime=30, alpha=0.0),
    "amazon-3cat": trainer.TrainConfig(D=30, D_prime=100, alpha=0.0),
    "uk-retail": trainer.TrainConfig(D=100, D_prime=20, alpha=1.0),
}

# Synthetic regimes: rank of the symmetric part follows the basket size.
REGIME_TRAIN = trainer.TrainConfig(D_prime=50, max_epochs=3000)

# Three categories of 100 items, variable basket sizes, skew factors regularized.
CORRELATION_SPEC = synthetic.OracleSpec(M=300, n_groups=3, popularity="zipf", basket_size=6,
                                        min_basket_size=2, n_baskets=3000)
CORRELATION_TRAIN = trainer.TrainConfig(D_prime=20, beta=1.0, gamma=1.0,
                                        convergence_rel_tol=1e-7, max_epochs=1500)


def preset(name: str, **overrides) -> trainer.TrainConfig:
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return replace(PRESETS[name], **overrides)


@dataclass(frozen=True)
class Comparison:
    nonsymmetric: float
    symmetric: float
    traces: tuple

    @property
    def gap(self) -> float:
        return self.nonsymmetric - self.symmetric


def train_pair(cfg: trainer.TrainConfig, dataset):
    """Fit the nonsymmetric model and its symmetric-only baseline with the same config."""
    return (trainer.fit(replace(cfg, symmetric_only=False), dataset),
            trainer.fit(replace(cfg, symmetric_only=True), dataset))


def regime_comparison(number: int, seed: int = 0, cfg: trainer.TrainConfig = REGIME_TRAIN,
                      **spec_overrides) -> Comparison:
    """Pair-level AUC of both models on a synthetic regime.

    Pairs are scored by ``det K_{ij}`` and labelled by the generating oracle.
    """
    spec = synthetic.regime(number, seed=seed, **spec_overrides)
    ds, labels = synthetic.generate(spec)
    ds = data.split(ds, seed=seed)
    traces = train_pair(replace(cfg, seed=seed), ds)
    aucs = [evaluation.pair_auc(marginal_kernel(assemble_L(t.final_params)),
                                labels.pairs, labels.pair_labels) for t in traces]
    return Comparison(aucs[0], aucs[1], traces)


@dataclass(frozen=True)
class CorrelationStudy:
    names: list
    fractions: np.ndarray
    trace: trainer.TrainTrace

    @property
    def within(self) -> float:
        return float(np.mean(np.diag(self.fractions)))

    @property
    def cross(self) -> float:
        off = ~np.eye(len(self.fractions), dtype=bool)
        return float(np.mean(self.fractions[off]))


def correlation_study(spec: synthetic.OracleSpec = CORRELATION_SPEC,
                      cfg: trainer.TrainConfig = CORRELATION_TRAIN, seed: int = 0) -> CorrelationStudy:
    """Fraction of positively correlated pairs within and across item groups."""
    ds, _ = synthetic.generate(spec)
    ds = data.split(ds, seed=seed)
    tr = trainer.fit(cfg, ds)
    K = marginal_kernel(assemble_L(tr.final_params))
    names, frac = evaluation.correlation_summary(K, [f"G{g}" for g in spec.group_of])
    return CorrelationStudy(names, frac, tr)
