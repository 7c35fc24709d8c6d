"""Basket datasets: parsing, splitting and per-item statistics.

File format: one basket per line, comma-separated external item IDs.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError

log = logging.getLogger(__name__)

TRAIN, VALIDATION, TEST = 0, 1, 2
SPLIT_NAMES = {TRAIN: "train", VALIDATION: "validation", TEST: "test"}
MIN_BASKET_SIZE = 2


@dataclass(frozen=True)
class LoadStats:
    n_lines: int = 0
    dropped_small: int = 0
    dropped_oversize: int = 0
    duplicates_removed: int = 0


@dataclass(frozen=True)
class BasketDataset:
    M: int
    baskets: tuple  # tuple of tuples of item indices
    splits: np.ndarray = field(repr=False)
    lam: np.ndarray = field(repr=False)
    item_vocab: tuple | None = None
    stats: LoadStats = LoadStats()

    @classmethod
    def from_baskets(cls, baskets: Sequence[Sequence[int]], M: int,
                     item_vocab: Sequence[str] | None = None, stats: LoadStats = LoadStats()):
        baskets = tuple(tuple(int(i) for i in b) for b in baskets)
        for n, b in enumerate(baskets):
            if len(set(b)) != len(b):
                raise DataError(f"basket {n} repeats an item")
            if b and (min(b) < 0 or max(b) >= M):
                raise DataError(f"basket {n} has items outside [0, {M})")
        splits = np.zeros(len(baskets), dtype=np.int8)
        vocab = None if item_vocab is None else tuple(item_vocab)
        return cls(M, baskets, splits, item_counts(baskets, M), vocab, stats)

    def _select(self, which):
        return [b for b, s in zip(self.baskets, self.splits) if s == which]

    @property
    def train(self) -> list:
        return self._select(TRAIN)

    @property
    def validation(self) -> list:
        return self._select(VALIDATION)

    @property
    def test(self) -> list:
        return self._select(TEST)

    @property
    def max_basket_size(self) -> int:
        return max(len(b) for b in self.baskets)

    def index_of(self, item_id: str) -> int:
        """Index of an external item ID; ``KeyError`` if the item is unknown."""
        if self.item_vocab is None:
            try:
                index = int(item_id)
            except ValueError:
                raise KeyError(item_id) from None
            if not 0 <= index < self.M:
                raise KeyError(item_id)
            return index
        if not hasattr(self, "_lookup"):
            object.__setattr__(self, "_lookup", {v: i for i, v in enumerate(self.item_vocab)})
        return self._lookup[item_id]

    def item_id(self, index: int) -> str:
        return str(index) if self.item_vocab is None else self.item_vocab[index]


def item_counts(baskets, M: int) -> np.ndarray:
    lam = np.zeros(M, dtype=np.int64)
    for b in baskets:
        lam[list(b)] += 1
    return lam


def parse_lines(lines, max_basket_size: int | None = None, min_basket_size: int = MIN_BASKET_SIZE):
    """Parse basket lines into (baskets of IDs, LoadStats)."""
    baskets, small, oversize, dups, n_lines = [], 0, 0, 0, 0
    for lineno, raw in enumerate(lines, start=1):
        n_lines += 1
        line = raw.strip()
        if not line:
            small += 1
            continue
        tokens = [t.strip() for t in line.split(",")]
        if any(t == "" for t in tokens):
            raise DataError(f"line {lineno}: empty item ID in {line!r}")
        seen = list(dict.fromkeys(tokens))
        dups += len(tokens) - len(seen)
        if len(seen) < min_basket_size:
            small += 1
            continue
        if max_basket_size is not None and len(seen) > max_basket_size:
            oversize += 1
            continue
        baskets.append(seen)
    return baskets, LoadStats(n_lines, small, oversize, dups)


def load(path, max_basket_size: int | None = None) -> BasketDataset:
    """Read a basket file; item indices follow first appearance among kept baskets."""
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            raw, stats = parse_lines(fh, max_basket_size)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not raw:
        raise DataError(f"{path}: no usable baskets (need >= {MIN_BASKET_SIZE} items each)")
    vocab = {}
    for b in raw:
        for item in b:
            vocab.setdefault(item, len(vocab))
    if stats.dropped_oversize:
        log.info("%s: dropped %d baskets larger than %d items",
                 path, stats.dropped_oversize, max_basket_size)
    if stats.duplicates_removed:
        log.warning("%s: removed %d duplicate items within baskets", path, stats.duplicates_removed)
    baskets = [[vocab[i] for i in b] for b in raw]
    return BasketDataset.from_baskets(baskets, len(vocab), list(vocab), stats)


def write(dataset: BasketDataset, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for b in dataset.baskets:
            fh.write(",".join(dataset.item_id(i) for i in b) + "\n")


def split(dataset: BasketDataset, train_frac: float = 0.8, val_frac_of_train: float = 0.05,
          seed: int = 0) -> BasketDataset:
    """Seeded shuffle into train / validation / test; ``lam`` recounted on train."""
    for name, f in (("train_frac", train_frac), ("val_frac_of_train", val_frac_of_train)):
        if not 0.0 < f < 1.0:
            raise DataError(f"{name} must lie in (0, 1), got {f}")
    n = len(dataset.baskets)
    order = np.random.default_rng(seed).permutation(n)
    n_outer = int(round(train_frac * n))
    n_val = max(1, int(round(val_frac_of_train * n_outer)))
    n_train = n_outer - n_val
    if n_train < 1 or n_outer >= n:
        raise DataError(f"{n} baskets cannot fill train/validation/test splits")
    splits = np.full(n, TEST, dtype=np.int8)
    splits[order[:n_train]] = TRAIN
    splits[order[n_train:n_outer]] = VALIDATION
    train = [b for b, s in zip(dataset.baskets, splits) if s == TRAIN]
    return replace(dataset, splits=splits, lam=item_counts(train, dataset.M))


def write_split_manifest(dataset: BasketDataset, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for i, s in enumerate(dataset.splits):
            fh.write(f"{i}\t{SPLIT_NAMES[int(s)]}\n")


def read_categories(path, dataset: BasketDataset) -> np.ndarray:
    """Read an ``item<TAB>category`` sidecar into a per-index category array.

    Items of the sidecar that are not in the dataset are ignored; dataset items
    missing from the sidecar are reported by :func:`evaluation.correlation_summary`.
    """
    cats = np.full(dataset.M, None, dtype=object)
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}: line {lineno}: expected 'item<TAB>category'")
            try:
                cats[dataset.index_of(parts[0])] = parts[1]
            except KeyError:
                continue
    return cats
