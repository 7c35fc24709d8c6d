"""Population log-likelihood, its derivatives and the Fisher-information nullspace.

All expectations are exact sums over the ``2^M`` subsets, so ``M`` is capped
at 12. Subsets are enumerated by :func:`kernel.powerset` (empty set first).
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import CapabilityError, ConditioningError, ConfigurationError
from .kernel import as_matrix, powerset
from .matrix_analysis import classify, is_irreducible

log = logging.getLogger(__name__)

MAX_M = 12
NULLSPACE_TOL = 1e-10
SVD_CUTOFF = 1e-10


class ThetaKind(enum.Enum):
    SYMMETRIC_PD = "symmetric positive definite"
    ALL_P = "all P-matrices"
    SIGNED_P = "signed P-matrices"
    SYM_PLUS_SKEW = "symmetric plus skew P-matrices"
    SIGNED_P_KNOWN_PATTERN = "signed P-matrices with known sign pattern"
    DIAG_PLUS_SKEW = "diagonal plus skew P-matrices"


@dataclass(frozen=True)
class ThetaClass:
    """A parameter class and the perturbation space it spans.

    ``sign_pattern[i, j]`` (for ``i < j``) is the fixed ``eps`` in
    ``H_ji = eps * H_ij``; only used by ``SIGNED_P_KNOWN_PATTERN``.
    """

    kind: ThetaKind
    sign_pattern: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind is ThetaKind.SIGNED_P_KNOWN_PATTERN and self.sign_pattern is None:
            raise ConfigurationError("a known sign pattern is required")

    def _link(self, M):
        """Per-pair coupling ``eps`` with ``H_ji = eps H_ij``, or ``None`` if unconstrained."""
        if self.kind is ThetaKind.SYMMETRIC_PD:
            return np.ones((M, M))
        if self.kind is ThetaKind.DIAG_PLUS_SKEW:
            return -np.ones((M, M))
        if self.kind is ThetaKind.SIGNED_P_KNOWN_PATTERN:
            eps = np.asarray(self.sign_pattern, dtype=np.float64)
            if eps.shape != (M, M):
                raise ConfigurationError(f"sign pattern must be {M} x {M}")
            return eps
        return None

    def basis(self, M: int) -> np.ndarray:
        """Frobenius-orthogonal basis of the perturbation space, shape ``(k, M, M)``."""
        link = self._link(M)
        out = []
        for i in range(M):
            for j in range(M):
                if link is not None and i > j:
                    continue
                E = np.zeros((M, M))
                E[i, j] = 1.0
                if link is not None and i < j:
                    E[j, i] = link[i, j]
                out.append(E)
        return np.array(out)

    def residual(self, H) -> float:
        """Distance from ``H`` to the perturbation space."""
        H = as_matrix(H)
        basis = self.basis(H.shape[0])
        coef = np.einsum("kij,ij->k", basis, H) / np.einsum("kij,kij->k", basis, basis)
        return float(np.linalg.norm(H - np.einsum("k,kij->ij", coef, basis)))

    def sign_linked(self, M: int) -> bool:
        return self._link(M) is not None


def _check_size(M):
    if M > MAX_M:
        raise CapabilityError(f"exact subset enumeration is capped at M={MAX_M}, got {M}")


def subsets(M: int) -> list:
    _check_size(M)
    return list(powerset(M))


def dpp_probabilities(L) -> np.ndarray:
    """``P_L(J)`` for every subset, in :func:`subsets` order."""
    L = as_matrix(L)
    M = L.shape[0]
    Z = np.linalg.det(L + np.eye(M))
    return np.array([np.linalg.det(L[np.ix_(J, J)]) if J else 1.0 for J in subsets(M)]) / Z


@dataclass(frozen=True)
class FisherProbe:
    L_star: np.ndarray
    H: np.ndarray
    theta: ThetaClass
    name: str = ""

    def __post_init__(self):
        L = np.asarray(self.L_star, dtype=np.float64)
        H = np.asarray(self.H, dtype=np.float64)
        if L.shape != H.shape:
            raise ConfigurationError("L_star and H must have the same shape")
        if not classify(L).is_P:
            raise ConfigurationError("L_star must be a P-matrix")
        if self.theta.residual(H) > 1e-12:
            raise ConfigurationError(f"H is not in the perturbation space of {self.theta.kind.value}")
        object.__setattr__(self, "L_star", L)
        object.__setattr__(self, "H", H)


def _inverse_blocks(L, Js, weights=None):
    """Yield ``(J, L_J^{-1})`` for nonempty ``J`` (with positive weight when given)."""
    for n, J in enumerate(Js):
        if not J or (weights is not None and weights[n] == 0):
            continue
        LJ = L[np.ix_(J, J)]
        if abs(np.linalg.det(LJ)) < 1e-300:
            raise ConditioningError(J, f"principal minor of L is singular at J={J}")
        yield n, J, np.linalg.inv(LJ)


def population_loglik(L, p_star) -> float:
    """``sum_J p*_J log det L_J - log det(L + I)``."""
    L = as_matrix(L)
    Js = subsets(L.shape[0])
    p = np.asarray(p_star, dtype=np.float64)
    if p.shape != (len(Js),):
        raise ConfigurationError(f"p_star needs {len(Js)} entries")
    total = 0.0
    for n, J in enumerate(Js):
        if not J or p[n] == 0:
            continue
        sign, logdet = np.linalg.slogdet(L[np.ix_(J, J)])
        if sign <= 0:
            log.warning("population log-likelihood is -inf: det(L_J) <= 0 at J=%s", J)
            return float("-inf")
        total += p[n] * logdet
    return total - float(np.linalg.slogdet(L + np.eye(L.shape[0]))[1])


def _traces(L, H, Js, weights=None):
    """``tr(L_J^{-1} H_J)`` and ``tr((L_J^{-1} H_J)^2)`` per subset (0 for the empty set)."""
    t1 = np.zeros(len(Js))
    t2 = np.zeros(len(Js))
    for n, J, inv in _inverse_blocks(L, Js, weights):
        X = inv @ H[np.ix_(J, J)]
        t1[n] = np.trace(X)
        t2[n] = np.trace(X @ X)
    return t1, t2


def d1_f(L, p_star, H) -> float:
    """Directional derivative of the population log-likelihood along ``H``."""
    L, H = as_matrix(L), as_matrix(H)
    p = np.asarray(p_star, dtype=np.float64)
    t1, _ = _traces(L, H, subsets(L.shape[0]), p)
    G = np.linalg.solve(np.eye(L.shape[0]) + L, H)
    return float(p @ t1 - np.trace(G))


def d2_f(L, p_star, H) -> float:
    """Second directional derivative ``d^2 f(L)(H, H)``."""
    L, H = as_matrix(L), as_matrix(H)
    p = np.asarray(p_star, dtype=np.float64)
    _, t2 = _traces(L, H, subsets(L.shape[0]), p)
    G = np.linalg.solve(np.eye(L.shape[0]) + L, H)
    return float(-(p @ t2) + np.trace(G @ G))


def trace_statistic(L_star, H) -> np.ndarray:
    """``tr((L*_J)^{-1} H_J)`` for every subset ``J``."""
    L, H = as_matrix(L_star), as_matrix(H)
    t1, _ = _traces(L, H, subsets(L.shape[0]))
    return t1


def fisher_form(L_star, H) -> float:
    """``Var_{Y ~ P_{L*}} tr((L*_Y)^{-1} H_Y)``, the Fisher information along ``H``."""
    p = dpp_probabilities(L_star)
    t = trace_statistic(L_star, H)
    mean = p @ t
    return float(p @ (t - mean) ** 2)


@dataclass(frozen=True)
class NullspaceResult:
    in_nullspace: bool
    violating_subset: Optional[tuple]
    max_abs_trace: float


def nullspace_check(probe: FisherProbe, tol: float = NULLSPACE_TOL) -> NullspaceResult:
    """Does ``tr((L*_J)^{-1} H_J) = 0`` hold for every subset ``J``?"""
    Js = subsets(probe.L_star.shape[0])
    t = trace_statistic(probe.L_star, probe.H)
    bad = np.flatnonzero(np.abs(t) > tol)
    return NullspaceResult(bad.size == 0, Js[bad[0]] if bad.size else None,
                           float(np.max(np.abs(t))))


def nullspace_basis(L_star, theta: ThetaClass) -> np.ndarray:
    """Basis ``(k, M, M)`` of the ``H`` in the perturbation space satisfying the trace condition.

    Builds the linear map ``H -> (tr((L*_J)^{-1} H_J))_J`` on a basis of the
    perturbation space and extracts its kernel by SVD with relative cutoff.
    """
    L = as_matrix(L_star)
    M = L.shape[0]
    basis = theta.basis(M)
    Js = subsets(M)
    A = np.zeros((len(Js), len(basis)))
    for n, J, inv in _inverse_blocks(L, Js):
        # tr(inv @ E_J) = sum(inv^T * E_J)
        A[n] = np.einsum("ij,kij->k", inv.T, basis[:, J][:, :, J])
    _, s, Vt = np.linalg.svd(A)
    cutoff = SVD_CUTOFF * (s[0] if s.size else 1.0)
    rank = int(np.sum(s > cutoff))
    coeffs = Vt[rank:]
    return np.einsum("rk,kij->rij", coeffs, basis)


def diagonal_blocks(L) -> list:
    """Index sets of the diagonal blocks of ``L`` (weak components of its support graph)."""
    L = as_matrix(L)
    adj = (np.abs(L) > 1e-12).astype(np.int8)
    n, labels = connected_components(adj, directed=True, connection="weak")
    return [np.flatnonzero(labels == k) for k in range(n)]


@dataclass(frozen=True)
class Lemma3Report:
    nullspace_dim: int
    zero_diagonal: bool
    linked_pairs_vanish: Optional[bool]  # None when the space is not sign-linked
    off_block_in_nullspace: Optional[bool]  # None when L* has a single block

    @property
    def ok(self) -> bool:
        return self.zero_diagonal and self.linked_pairs_vanish is not False \
            and self.off_block_in_nullspace is not False


def lemma3_checks(L_star, theta: ThetaClass, tol: float = 1e-9) -> Lemma3Report:
    """Check the three structural facts about Fisher-information nullspaces.

    1. every nullspace member has a zero diagonal;
    2. for sign-linked spaces, coordinates ``(i, j)`` with ``L*_ij != 0`` vanish;
    3. if ``L*`` is block diagonal, perturbations supported off the blocks
       lie in the nullspace.
    """
    L = as_matrix(L_star)
    M = L.shape[0]
    N = nullspace_basis(L, theta)
    zero_diag = bool(np.all(np.abs(np.diagonal(N, axis1=1, axis2=2)) <= tol)) if len(N) else True

    linked = None
    if theta.sign_linked(M):
        mask = (np.abs(L) > 1e-12) & ~np.eye(M, dtype=bool)
        linked = bool(np.all(np.abs(N[:, mask]) <= tol)) if len(N) else True

    off_block = None
    blocks = diagonal_blocks(L)
    if len(blocks) > 1:
        same = np.zeros((M, M), dtype=bool)
        for b in blocks:
            same[np.ix_(b, b)] = True
        off = [E for E in theta.basis(M) if not np.any(E[same])]
        off_block = all(
            np.max(np.abs(trace_statistic(L, E))) <= NULLSPACE_TOL for E in off)
    return Lemma3Report(len(N), zero_diag, linked, off_block)


def appendix_probes() -> list:
    """Nonzero perturbations satisfying the trace condition at irreducible kernels.

    Two 2 x 2 signed kernels (``eps = +1, -1``), a symmetric tridiagonal 3 x 3
    kernel and a diagonal-plus-skew 3 x 3 kernel.
    """
    probes = []
    for eps in (1.0, -1.0):
        probes.append(FisherProbe(
            np.array([[1.0, 0.5], [eps / 2, 1.0]]),
            np.array([[0.0, 1.0], [-eps, 0.0]]),
            ThetaClass(ThetaKind.SIGNED_P), name=f"2x2 signed, eps={eps:+.0f}"))
    H3 = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    probes.append(FisherProbe(
        np.array([[1.0, 0.5, 0.0], [0.5, 1.0, 0.5], [0.0, 0.5, 1.0]]), H3,
        ThetaClass(ThetaKind.SIGNED_P), name="3x3 symmetric tridiagonal"))
    probes.append(FisherProbe(
        np.array([[1.0, 0.5, 0.0], [-0.5, 1.0, 0.5], [0.0, -0.5, 1.0]]), H3,
        ThetaClass(ThetaKind.DIAG_PLUS_SKEW), name="3x3 diagonal plus skew"))
    return probes


def verify_probe(probe: FisherProbe, tol: float = 1e-12) -> dict:
    """Nonzero ``H``, trace condition at ``tol`` and irreducible ``L*``."""
    res = nullspace_check(probe, tol)
    return dict(name=probe.name, H_nonzero=bool(np.any(probe.H != 0)),
                in_nullspace=res.in_nullspace, max_abs_trace=res.max_abs_trace,
                irreducible=is_irreducible(probe.L_star))
