"""Policy-driven synthetic basket generator with known pair structure.

Items are split into disjoint groups. Each positive basket is drawn from a
single group (groups visited round-robin), sampling items without
replacement according to per-group popularity weights. Negative baskets mix
at least two groups and are used only for evaluation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .data import BasketDataset
from .errors import ConfigurationError, DataError

_MAX_REJECTIONS = 10_000
_VOLUME_SIMULATIONS = 20_000


@dataclass(frozen=True)
class OracleSpec:
    M: int = 100
    n_baskets: int = 100
    basket_size: int = 6
    n_groups: int = 1
    popularity: str = "zipf"  # "zipf" (weight ~ 1/rank within group) or "uniform"
    seed: int = 0
    auc_threshold: Optional[float] = None
    unique_baskets: bool = False  # rejection-resample repeated baskets
    min_basket_size: Optional[int] = None  # sizes uniform in [min, basket_size]; None = fixed

    def __post_init__(self):
        if self.n_groups < 1 or self.M < self.n_groups:
            raise ConfigurationError(f"cannot split {self.M} items into {self.n_groups} groups")
        if self.popularity not in ("zipf", "uniform"):
            raise ConfigurationError(f"unknown popularity scheme {self.popularity!r}")
        if self.basket_size < 1 or self.basket_size > self.M // self.n_groups:
            raise ConfigurationError(
                f"basket_size {self.basket_size} exceeds the smallest group "
                f"({self.M // self.n_groups} items)")
        if self.min_basket_size is not None and not 1 <= self.min_basket_size <= self.basket_size:
            raise ConfigurationError("min_basket_size must lie in [1, basket_size]")
        if self.n_baskets < 1:
            raise ConfigurationError("n_baskets must be >= 1")

    @property
    def groups(self) -> list:
        return np.array_split(np.arange(self.M), self.n_groups)

    @property
    def group_of(self) -> np.ndarray:
        g = np.empty(self.M, dtype=np.intp)
        for k, items in enumerate(self.groups):
            g[items] = k
        return g

    def weights(self, group: int) -> np.ndarray:
        n = len(self.groups[group])
        w = 1.0 / np.arange(1, n + 1) if self.popularity == "zipf" else np.ones(n)
        return w / w.sum()


REGIMES = {
    # few negative correlations: one group, popularity-weighted, diverse baskets
    1: dict(M=100, n_baskets=100, basket_size=6, n_groups=1, popularity="zipf",
            unique_baskets=True),
    # sparse positives inside many disjoint groups
    2: dict(M=100, n_baskets=100, basket_size=6, n_groups=14, popularity="uniform"),
    # disjoint groups plus popularity structure
    3: dict(M=100, n_baskets=100, basket_size=6, n_groups=3, popularity="zipf"),
}


def regime(number: int, **overrides) -> OracleSpec:
    if number not in REGIMES:
        raise ConfigurationError(f"unknown regime {number}; choose from {sorted(REGIMES)}")
    return OracleSpec(**{**REGIMES[number], **overrides})


@dataclass(frozen=True)
class LabeledPairs:
    positives: list
    negatives: list
    pairs: np.ndarray = field(repr=False)         # (P, 2) item pairs i < j
    pair_labels: np.ndarray = field(repr=False)   # True = positive
    ground_truth_volume: np.ndarray = field(repr=False)  # M x M expected Pr(i, j in Y)


def _size(rng, spec):
    if spec.min_basket_size is None:
        return spec.basket_size
    return int(rng.integers(spec.min_basket_size, spec.basket_size + 1))


def _draw(rng, spec, group):
    items = spec.groups[group]
    pick = rng.choice(len(items), size=_size(rng, spec), replace=False, p=spec.weights(group))
    return tuple(sorted(int(i) for i in items[pick]))


def expected_pair_volumes(spec: OracleSpec) -> np.ndarray:
    """Pair co-occurrence probabilities under the policy, by seeded simulation.

    Entry ``(i, j)`` estimates ``Pr(i, j in Y)`` for a basket ``Y`` from the
    policy; cross-group entries are exactly 0. The diagonal holds ``Pr(i in Y)``.
    """
    rng = np.random.default_rng([spec.seed, 1])
    G = np.zeros((spec.M, spec.M))
    n_per_group = max(1, _VOLUME_SIMULATIONS // spec.n_groups)
    for g, items in enumerate(spec.groups):
        w = spec.weights(g)
        counts = np.zeros((len(items), len(items)))
        for _ in range(n_per_group):
            pick = rng.choice(len(items), size=_size(rng, spec), replace=False, p=w)
            counts[np.ix_(pick, pick)] += 1
        G[np.ix_(items, items)] = counts / (n_per_group * spec.n_groups)
    return G


def pair_label(spec: OracleSpec, i: int, j: int) -> bool:
    """True (positive) iff ``i`` and ``j`` share a group."""
    if i == j:
        raise ValueError("pair_label needs two distinct items")
    g = spec.group_of
    return bool(g[i] == g[j])


def _negatives(rng, spec, positives):
    g = spec.group_of
    out = []
    for p in positives:
        for _ in range(_MAX_REJECTIONS):
            b = rng.choice(spec.M, size=len(p), replace=False)
            if spec.n_groups == 1 or len(p) < 2 or len(set(g[b])) >= 2:
                break
        out.append(tuple(sorted(int(i) for i in b)))
    return out


def generate(spec: OracleSpec) -> tuple[BasketDataset, LabeledPairs]:
    rng = np.random.default_rng(spec.seed)
    baskets, seen = [], set()
    for n in range(spec.n_baskets):
        group = n % spec.n_groups
        for _ in range(_MAX_REJECTIONS):
            b = _draw(rng, spec, group)
            if not spec.unique_baskets or b not in seen:
                break
        else:
            raise ConfigurationError("could not draw enough distinct baskets")
        seen.add(b)
        baskets.append(b)
    negatives = _negatives(rng, spec, baskets)

    volumes = expected_pair_volumes(spec)
    iu, ju = np.triu_indices(spec.M, k=1)
    pairs = np.stack([iu, ju], axis=1)
    if spec.n_groups > 1:
        g = spec.group_of
        labels = g[iu] == g[ju]
    else:
        # one group: label by expected co-occurrence against the threshold
        vol = volumes[iu, ju]
        thr = np.median(vol) if spec.auc_threshold is None else spec.auc_threshold
        labels = vol > thr
    dataset = BasketDataset.from_baskets(baskets, spec.M)
    return dataset, LabeledPairs(baskets, negatives, pairs, labels, volumes)


def write_labels(labels: LabeledPairs, path, item_id=str) -> None:
    """One line per pair: ``i<TAB>j<TAB>+`` or ``i<TAB>j<TAB>-``."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for (i, j), pos in zip(labels.pairs, labels.pair_labels):
            fh.write(f"{item_id(i)}\t{item_id(j)}\t{'+' if pos else '-'}\n")


def read_labels(path) -> list[tuple[str, str, bool]]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3 or parts[2] not in ("+", "-", "−"):
                raise DataError(f"{path}: line {lineno}: expected 'i<TAB>j<TAB>{{+,-}}'")
            out.append((parts[0], parts[1], parts[2] == "+"))
    return out


def write_groups(spec: OracleSpec, path) -> None:
    """``item<TAB>group`` sidecar usable as a category map."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for i, g in enumerate(spec.group_of):
            fh.write(f"{i}\tG{g}\n")
