"""Next-item prediction (MPR), subset discrimination (AUC) and correlation summaries."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import ConditioningError, DataError
from .kernel import (DEFAULT_EPSILON, as_matrix, marginal_kernel, pair_correlations,
                     pair_volumes)
from .likelihood import basket_logdets

log = logging.getLogger(__name__)


@dataclass
class EvalReport:
    mpr: Optional[float] = None
    mpr_ci: Optional[tuple] = None
    auc: Optional[float] = None
    auc_ci: Optional[tuple] = None
    n_test: int = 0
    n_skipped: int = 0
    correlation_summary: Optional[tuple] = field(default=None, repr=False)

    def to_text(self) -> str:
        """``key=value`` lines; floats use ``repr`` so reruns diff byte-for-byte."""
        lines = [f"n_test={self.n_test}", f"n_skipped={self.n_skipped}"]
        for name in ("mpr", "auc"):
            value = getattr(self, name)
            if value is None:
                continue
            lo, hi = getattr(self, f"{name}_ci")
            lines += [f"{name}={value!r}", f"{name}_ci_lo={lo!r}", f"{name}_ci_hi={hi!r}"]
        if self.correlation_summary is not None:
            cats, frac = self.correlation_summary
            for a, ca in enumerate(cats):
                for b, cb in enumerate(cats):
                    lines.append(f"positive_corr_frac[{ca},{cb}]={float(frac[a, b])!r}")
        return "\n".join(lines) + "\n"


def next_item_scores(L, J: Sequence[int], epsilon: float = 0.0):
    """Conditional-kernel diagonal ``L^J_ii`` for every ``i`` outside ``J``.

    Equals ``det(L_{J+i}) / det(L_J)``. Returns ``(items, scores)``.
    """
    L = as_matrix(L)
    M = L.shape[0]
    J = np.asarray(sorted(set(int(j) for j in J)), dtype=np.intp)
    if J.size == 0:
        raise ValueError("next_item_scores needs a nonempty conditioning set")
    rest = np.setdiff1d(np.arange(M), J)
    LJ = L[np.ix_(J, J)] + epsilon * np.eye(J.size)
    try:
        X = np.linalg.solve(LJ, L[np.ix_(J, rest)])
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(J.tolist()) from exc
    if not np.all(np.isfinite(X)):
        raise ConditioningError(J.tolist())
    scores = L[rest, rest] - np.einsum("ij,ji->i", L[np.ix_(rest, J)], X)
    return rest, scores


def percentile_rank(scores: np.ndarray, target: int) -> float:
    """``100 * #{i': s_target >= s_i'} / n``; ties favor the target."""
    return 100.0 * float(np.mean(scores[target] >= scores))


Scorer = Callable[[Sequence[int]], tuple]


def percentile_ranks(L, baskets, seed: int = 0, epsilon: float = DEFAULT_EPSILON,
                     scorer: Scorer | None = None):
    """Per-basket percentile rank of one seeded-random held-out item.

    Returns ``(ranks, n_skipped)``; baskets whose conditioning fails are skipped.
    """
    if scorer is None:
        Lm = as_matrix(L)
        scorer = lambda J: next_item_scores(Lm, J, epsilon)  # noqa: E731
    rng = np.random.default_rng(seed)
    ranks, skipped = [], 0
    for b in baskets:
        b = list(b)
        if len(b) < 2:
            skipped += 1
            continue
        held = b[int(rng.integers(len(b)))]
        J = [i for i in b if i != held]
        try:
            items, scores = scorer(J)
        except (ConditioningError, np.linalg.LinAlgError):
            skipped += 1
            continue
        ranks.append(percentile_rank(scores, int(np.searchsorted(items, held))))
    return np.array(ranks), skipped


def mpr(L, test_baskets, seed: int = 0, epsilon: float = DEFAULT_EPSILON,
        scorer: Scorer | None = None) -> float:
    ranks, _ = percentile_ranks(L, test_baskets, seed, epsilon, scorer)
    if ranks.size == 0:
        raise DataError("no test basket could be scored")
    return float(ranks.mean())


def auc_from_scores(pos_scores, neg_scores) -> float:
    """P(random positive outscores random negative), ties counting one half."""
    pos = np.asarray(pos_scores, dtype=np.float64)
    neg = np.asarray(neg_scores, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("AUC needs at least one positive and one negative")
    ranks = rankdata(np.concatenate([pos, neg]))
    u = ranks[:pos.size].sum() - pos.size * (pos.size + 1) / 2.0
    return float(u / (pos.size * neg.size))


def random_negatives(positives, M: int, seed: int = 0) -> list:
    """A uniform random subset of the same size for every positive, no repeated items."""
    rng = np.random.default_rng(seed)
    return [tuple(sorted(rng.choice(M, size=len(p), replace=False).tolist())) for p in positives]


def subset_scores(L, subsets, score: str = "loglik", epsilon: float = DEFAULT_EPSILON,
                  K=None) -> np.ndarray:
    """Score subsets by model log-likelihood or by marginal volume ``det(K_J)``."""
    L = as_matrix(L)
    if score == "loglik":
        logdets, _ = basket_logdets(L, subsets, epsilon)
        _, lognorm = np.linalg.slogdet(L + np.eye(L.shape[0]))
        return logdets - lognorm
    if score == "marginal":
        K = as_matrix(marginal_kernel(L) if K is None else K)
        return np.array([np.linalg.det(K[np.ix_(s, s)]) for s in map(list, subsets)])
    raise ValueError(f"unknown score {score!r}")


def auc(L, positives, negatives=None, seed: int = 0, score: str = "loglik",
        epsilon: float = DEFAULT_EPSILON) -> float:
    """AUC of positive subsets against supplied or randomly generated negatives."""
    if len(positives) == 0:
        raise ValueError("auc needs positive subsets")
    if negatives is None:
        negatives = random_negatives(positives, as_matrix(L).shape[0], seed)
    return auc_from_scores(subset_scores(L, positives, score, epsilon),
                           subset_scores(L, negatives, score, epsilon))


def pair_auc(K, pairs, labels) -> float:
    """AUC of pair labels scored by the model's pair volume ``det(K_{ij})``."""
    G = pair_volumes(K)
    pairs = np.asarray(pairs)
    labels = np.asarray(labels, dtype=bool)
    s = G[pairs[:, 0], pairs[:, 1]]
    return auc_from_scores(s[labels], s[~labels])


def correlation_summary(K, category_map):
    """Fraction of positively correlated item pairs for each ordered category pair.

    Returns ``(categories, fractions)`` with ``fractions[a, b]`` over pairs
    ``i in C_a, j in C_b, i != j``.
    """
    cats = np.asarray(category_map, dtype=object)
    Km = as_matrix(K)
    if cats.shape != (Km.shape[0],):
        raise DataError("category map must cover every item")
    missing = [i for i, c in enumerate(cats) if c is None]
    if missing:
        raise DataError(f"items without a category: {missing[:20]}"
                        + (" ..." if len(missing) > 20 else ""))
    names = sorted(set(cats.tolist()))
    positive = pair_correlations(Km) > 0
    offdiag = ~np.eye(Km.shape[0], dtype=bool)
    frac = np.zeros((len(names), len(names)))
    members = [cats == c for c in names]
    for a, ma in enumerate(members):
        for b, mb in enumerate(members):
            block = np.ix_(ma, mb)
            n = offdiag[block].sum()
            frac[a, b] = positive[block][offdiag[block]].sum() / n if n else 0.0
    return names, frac


def bootstrap_ci(metric_fn: Callable, samples, n_boot: int = 1000, seed: int = 0,
                 level: float = 0.95) -> tuple[float, float]:
    """Percentile bootstrap over ``samples`` (resampled along the first axis)."""
    samples = np.asarray(samples)
    if len(samples) == 0:
        raise ValueError("bootstrap needs samples")
    rng = np.random.default_rng(seed)
    n = len(samples)
    stats = np.array([metric_fn(samples[rng.integers(0, n, n)]) for _ in range(n_boot)])
    point = metric_fn(samples)
    lo, hi = np.quantile(stats, [(1 - level) / 2, (1 + level) / 2])
    return float(min(lo, point)), float(max(hi, point))


def paired_auc(pairs_of_scores) -> float:
    """AUC for an ``(n, 2)`` array of (positive score, negative score) rows."""
    a = np.asarray(pairs_of_scores)
    return auc_from_scores(a[:, 0], a[:, 1])


def volume_error_grid(K, oracle_volumes) -> np.ndarray:
    """``|det(K_{ij}) - oracle Pr(i, j in Y)|`` per pair."""
    return np.abs(pair_volumes(K) - np.asarray(oracle_volumes))


def write_grid(G, path) -> None:
    G = np.asarray(G, dtype=np.float64)
    with Path(path).open("w", encoding="utf-8") as fh:
        for row in G:
            fh.write("\t".join(repr(float(x)) for x in row) + "\n")


def read_grid(path) -> np.ndarray:
    return np.loadtxt(path, delimiter="\t", ndmin=2)
