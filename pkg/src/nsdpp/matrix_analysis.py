"""Brute-force checks of the matrix classes DPP kernels live in.

Everything here enumerates principal minors exhaustively, so it is meant for
small matrices (M <= 16) used in verification, not for training-time code.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import CapabilityError, ConfigurationError
from .kernel import as_matrix

MAX_ENUMERATION_SIZE = 16
DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class MatrixClassReport:
    is_P0: bool
    is_P: bool
    symmetric_part_psd: bool
    min_principal_minor: float
    witness_subset: Optional[tuple]
    sign_pattern: Optional[np.ndarray]


def _square(Mx) -> np.ndarray:
    Mx = as_matrix(Mx)
    if Mx.ndim != 2 or Mx.shape[0] != Mx.shape[1]:
        raise ConfigurationError(f"expected a square matrix, got shape {Mx.shape}")
    return Mx


def decompose_sym_skew(Mx) -> tuple[np.ndarray, np.ndarray]:
    """Split into symmetric ``(M + M^T)/2`` and skew ``(M - M^T)/2`` parts."""
    Mx = _square(Mx)
    S = 0.5 * (Mx + Mx.T)
    A = 0.5 * (Mx - Mx.T)
    return S, A


def principal_minors(Mx, min_size: int = 1) -> dict[tuple, float]:
    """Map every principal index subset (size >= ``min_size``) to its minor."""
    Mx = _square(Mx)
    M = Mx.shape[0]
    if M > MAX_ENUMERATION_SIZE:
        raise CapabilityError(
            f"exhaustive minor enumeration is capped at M={MAX_ENUMERATION_SIZE}, got M={M}")
    out = {(): 1.0} if min_size == 0 else {}
    for k in range(max(min_size, 1), M + 1):
        subsets = list(combinations(range(M), k))
        idx = np.array(subsets, dtype=np.intp)
        blocks = Mx[idx[:, :, None], idx[:, None, :]]
        dets = np.linalg.det(blocks)
        out.update(zip(subsets, dets.tolist()))
    return out


def cofactor_det(Mx) -> float:
    """Determinant by Laplace expansion along the first row.

    Exponential time; kept as an oracle independent of LU factorization.
    """
    Mx = np.asarray(Mx, dtype=np.float64)
    n = Mx.shape[0]
    if n == 0:
        return 1.0
    if n == 1:
        return float(Mx[0, 0])
    if n == 2:
        return float(Mx[0, 0] * Mx[1, 1] - Mx[0, 1] * Mx[1, 0])
    total = 0.0
    cols = np.arange(n)
    for j in range(n):
        if Mx[0, j] == 0.0:
            continue
        minor = Mx[1:][:, cols != j]
        total += (-1) ** j * Mx[0, j] * cofactor_det(minor)
    return total


def check_sign_pattern(Mx, tol: float = 1e-10) -> Optional[np.ndarray]:
    """Return ``eps`` with ``L_ij = eps_ij L_ji`` off the diagonal, or ``None``.

    Pairs where both entries vanish get ``eps = 0`` (unconstrained). The
    diagonal of the result is 0.
    """
    Mx = _square(Mx)
    absM = np.abs(Mx)
    if np.any(np.abs(absM - absM.T) > tol):
        return None
    eps = np.where(np.abs(Mx - Mx.T) <= tol, 1, -1).astype(np.int8)
    both_zero = (absM <= tol) & (absM.T <= tol)
    eps[both_zero] = 0
    np.fill_diagonal(eps, 0)
    return eps


def classify(Mx, tol: float = DEFAULT_TOL) -> MatrixClassReport:
    """Enumerate all nonempty principal minors and report P0/P/PSD membership."""
    Mx = _square(Mx)
    minors = principal_minors(Mx, min_size=1)
    subsets = list(minors)
    vals = np.array([minors[s] for s in subsets])
    k = int(np.argmin(vals))
    min_minor = float(vals[k])
    is_P0 = bool(min_minor >= -tol)
    is_P = bool(min_minor > tol)
    S, _ = decompose_sym_skew(Mx)
    psd = bool(np.linalg.eigvalsh(S).min() >= -tol)
    return MatrixClassReport(
        is_P0=is_P0,
        is_P=is_P,
        symmetric_part_psd=psd,
        min_principal_minor=min_minor,
        witness_subset=None if is_P0 else subsets[k],
        sign_pattern=check_sign_pattern(Mx),
    )


def is_irreducible(Mx, tol: float = 1e-12) -> bool:
    """True iff no symmetric permutation makes ``Mx`` block (upper) triangular.

    Tested as strong connectivity of the digraph with an edge ``i -> j``
    whenever ``|Mx_ij| > tol``.
    """
    Mx = _square(Mx)
    if Mx.shape[0] == 1:
        return True
    adj = (np.abs(Mx) > tol).astype(np.int8)
    np.fill_diagonal(adj, 0)
    n, _ = connected_components(adj, directed=True, connection="strong")
    return n == 1
