"""Kernel assembly and determinantal quantities for low-rank nonsymmetric DPPs.

The L-ensemble is ``L = V V^T + (B C^T - C B^T)``: a PSD part plus a
skew-symmetric part, which makes ``L + L^T`` PSD and therefore every principal
minor of ``L`` nonnegative.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .errors import ConditioningError, ConfigurationError, NumericalError

#: Default diagonal jitter added to ``L_J`` inside likelihood computations.
DEFAULT_EPSILON = 1e-5
#: Finite stand-in for ``log 0`` when a minor is nonpositive.
LOG_SENTINEL = -1e10

_SKEW_TOL = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LowRankParams:
    """Trainable factors ``V`` (M x D), ``B`` and ``C`` (M x D')."""

    V: np.ndarray
    B: Optional[np.ndarray] = None  # None or empty -> D' = 0
    C: Optional[np.ndarray] = None

    def __post_init__(self):
        V = _frozen(self.V)
        if V.ndim != 2 or V.shape[0] < 1 or V.shape[1] < 1:
            raise ConfigurationError(f"V must be M x D with M, D >= 1, got {V.shape}")
        M = V.shape[0]
        B = _frozen(np.zeros((M, 0)) if self.B is None or np.size(self.B) == 0 else self.B)
        C = _frozen(np.zeros((M, 0)) if self.C is None or np.size(self.C) == 0 else self.C)
        if B.ndim != 2 or C.ndim != 2 or B.shape[0] != M or C.shape[0] != M:
            raise ConfigurationError(
                f"row counts differ: V {V.shape}, B {B.shape}, C {C.shape}")
        if B.shape != C.shape:
            raise ConfigurationError(f"B and C shapes differ: {B.shape} vs {C.shape}")
        for name, a in (("V", V), ("B", B), ("C", C)):
            if not np.all(np.isfinite(a)):
                raise ConfigurationError(f"{name} has non-finite entries")
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def M(self) -> int:
        return self.V.shape[0]

    @property
    def D(self) -> int:
        return self.V.shape[1]

    @property
    def D_prime(self) -> int:
        return self.B.shape[1]

    @classmethod
    def symmetric(cls, V) -> "LowRankParams":
        return cls(V, None, None)

    def replace(self, **kw) -> "LowRankParams":
        return LowRankParams(kw.get("V", self.V), kw.get("B", self.B), kw.get("C", self.C))


class KernelRole(enum.Enum):
    L_ENSEMBLE = "L"
    MARGINAL = "K"
    CONDITIONAL = "L^J"


@dataclass(frozen=True)
class DenseKernel:
    """A materialized kernel matrix.

    ``index_map[r]`` is the ground-set item that row/column ``r`` refers to;
    it is the identity except for conditional kernels.
    """

    entries: np.ndarray
    role: KernelRole = KernelRole.L_ENSEMBLE
    index_map: np.ndarray = field(default=None)

    def __post_init__(self):
        E = _frozen(self.entries)
        if E.ndim != 2 or E.shape[0] != E.shape[1]:
            raise ConfigurationError(f"kernel must be square, got {E.shape}")
        idx = np.arange(E.shape[0]) if self.index_map is None else np.asarray(self.index_map, dtype=np.intp)
        if idx.shape != (E.shape[0],):
            raise ConfigurationError("index_map length must match kernel size")
        idx = idx.copy()
        idx.setflags(write=False)
        object.__setattr__(self, "entries", E)
        object.__setattr__(self, "index_map", idx)

    @property
    def M(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True)
class SubsetProbability:
    log_numerator: float
    log_normalizer: float
    log_prob: float
    singular: bool = False


def as_matrix(L) -> np.ndarray:
    return L.entries if isinstance(L, DenseKernel) else np.asarray(L, dtype=np.float64)


def powerset(M: int, min_size: int = 0) -> Iterator[tuple]:
    """All subsets of ``range(M)`` as sorted tuples, by increasing size."""
    for k in range(min_size, M + 1):
        yield from combinations(range(M), k)


def slogdet(X: np.ndarray) -> tuple[float, float]:
    """Sign and log-|det| via LU with partial pivoting. Empty matrix -> (1, 0)."""
    if X.shape[-1] == 0:
        return 1.0, 0.0
    sign, logabs = np.linalg.slogdet(X)
    return float(sign), float(logabs)


def skew_part(params: LowRankParams) -> np.ndarray:
    BC = params.B @ params.C.T
    return BC - BC.T


def assemble_L(params: LowRankParams) -> DenseKernel:
    """``L = V V^T + (B C^T - C B^T)``; the second term is skew to machine precision."""
    A = skew_part(params)
    # BC^T - (BC^T)^T is exactly antisymmetric in floating point
    if A.size and np.max(np.abs(A + A.T)) > _SKEW_TOL:
        raise NumericalError("skew part lost antisymmetry")
    return DenseKernel(params.V @ params.V.T + A, KernelRole.L_ENSEMBLE)


def log_normalizer(L) -> float:
    """``log det(L + I)``."""
    Lm = as_matrix(L)
    sign, logdet = slogdet(Lm + np.eye(Lm.shape[0]))
    if sign <= 0:
        raise NumericalError("det(L + I) is nonpositive; L is not a P0-matrix")
    return logdet


def marginal_kernel(L) -> DenseKernel:
    """``K = I - (L + I)^{-1}``."""
    Lm = as_matrix(L)
    I = np.eye(Lm.shape[0])
    cond = np.linalg.cond(Lm + I)
    if not np.isfinite(cond) or cond > 1.0 / np.finfo(float).eps:
        raise NumericalError(f"L + I is singular (condition number {cond:.3g})")
    return DenseKernel(I - np.linalg.inv(Lm + I), KernelRole.MARGINAL)


def log_subset_prob(L, J: Iterable[int], epsilon: float = 0.0,
                    log_norm: float | None = None) -> SubsetProbability:
    """``log P_L(J) = log det(L_J + eps I) - log det(L + I)``.

    A nonpositive (stabilized) minor yields ``LOG_SENTINEL`` with ``singular=True``.
    """
    Lm = as_matrix(L)
    J = np.asarray(sorted(J), dtype=np.intp)
    if J.size and (J.min() < 0 or J.max() >= Lm.shape[0]):
        raise ConfigurationError(f"subset {J.tolist()} out of range for M={Lm.shape[0]}")
    if log_norm is None:
        log_norm = log_normalizer(Lm)
    sign, num = slogdet(Lm[np.ix_(J, J)] + epsilon * np.eye(J.size))
    singular = sign <= 0 or not np.isfinite(num)
    if singular:
        num = LOG_SENTINEL
    return SubsetProbability(num, log_norm, num - log_norm, singular)


def conditional_kernel(L, J: Sequence[int], epsilon: float = 0.0) -> DenseKernel:
    """Kernel of the DPP conditioned on ``J`` being included.

    Schur complement ``L_Jc - L_{Jc,J} (L_J + eps I)^{-1} L_{J,Jc}`` over the
    complement ``Jc``; ``index_map`` holds the surviving ground-set items.
    """
    if isinstance(L, DenseKernel):
        Lm, base_idx = L.entries, L.index_map
    else:
        Lm = np.asarray(L, dtype=np.float64)
        base_idx = np.arange(Lm.shape[0])
    M = Lm.shape[0]
    J = np.asarray(sorted(set(int(j) for j in J)), dtype=np.intp)
    mask = np.ones(M, dtype=bool)
    mask[J] = False
    Jc = np.flatnonzero(mask)
    if J.size == 0:
        return DenseKernel(Lm.copy(), KernelRole.CONDITIONAL, base_idx)
    LJ = Lm[np.ix_(J, J)] + epsilon * np.eye(J.size)
    sign, _ = slogdet(LJ)
    if sign == 0:
        raise ConditioningError(base_idx[J].tolist())
    try:
        X = np.linalg.solve(LJ, Lm[np.ix_(J, Jc)])
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(base_idx[J].tolist()) from exc
    if not np.all(np.isfinite(X)):
        raise ConditioningError(base_idx[J].tolist())
    LJc = Lm[np.ix_(Jc, Jc)] - Lm[np.ix_(Jc, J)] @ X
    return DenseKernel(LJc, KernelRole.CONDITIONAL, base_idx[Jc])


def pair_correlation(K, i: int, j: int) -> float:
    """``cov(1[i in Y], 1[j in Y]) = -K_ij K_ji``; positive means attraction."""
    if i == j:
        raise ValueError("pair_correlation needs two distinct items")
    Km = as_matrix(K)
    return float(-Km[i, j] * Km[j, i])


def pair_correlations(K) -> np.ndarray:
    """Matrix of ``-K_ij K_ji`` for all pairs (diagonal set to 0)."""
    Km = as_matrix(K)
    C = -Km * Km.T
    np.fill_diagonal(C, 0.0)
    return C


def pair_volumes(K) -> np.ndarray:
    """``det(K_{ij}) = K_ii K_jj - K_ij K_ji``; the diagonal holds ``K_ii``."""
    Km = as_matrix(K)
    d = np.diag(Km)
    G = np.outer(d, d) - Km * Km.T
    np.fill_diagonal(G, d)
    return G
