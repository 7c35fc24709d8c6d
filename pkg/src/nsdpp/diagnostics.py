"""Self-check sweeps used by ``nsdpp diagnose`` and the demos.

Each sweep returns a list of :class:`CheckResult`; a build is healthy when all pass.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fisher, likelihood
from .kernel import LowRankParams, assemble_L
from .matrix_analysis import classify

FD_STEP = 1e-5
FD_FLOOR = 1e-8  # absolute floor on the denominator for near-zero components


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float

    def to_text(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name}\t{status}\tvalue={self.value!r}\tthreshold={self.threshold!r}"


def random_params(rng, M: int, D: int, D_prime: int, scale: float = 1.0) -> LowRankParams:
    return LowRankParams(scale * rng.standard_normal((M, D)),
                         scale * rng.standard_normal((M, D_prime)),
                         scale * rng.standard_normal((M, D_prime)))


def random_p_kernel(rng, M: int) -> np.ndarray:
    """Dense P-matrix: positive definite symmetric part plus a random skew part."""
    X = rng.standard_normal((M, M))
    A = rng.standard_normal((M, M))
    return X @ X.T / M + 0.5 * np.eye(M) + 0.5 * (A - A.T)


def random_baskets(rng, M: int, max_size: int, n: int) -> list:
    return [sorted(rng.choice(M, size=rng.integers(1, max_size + 1), replace=False).tolist())
            for _ in range(n)]


def p0_sweep(n: int = 1000, max_m: int = 8, seed: int = 0, tol: float = 1e-9) -> list:
    """Smallest principal minor over ``n`` random assembled kernels."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(n):
        M = int(rng.integers(1, max_m + 1))
        params = random_params(rng, M, int(rng.integers(1, M + 1)), int(rng.integers(0, M + 1)))
        worst = min(worst, classify(assemble_L(params).entries, tol).min_principal_minor)
    return [CheckResult(f"p0_min_principal_minor[n={n},M<={max_m}]", worst >= -tol, worst, -tol)]


def gradient_relative_error(params, baskets, cfg, epsilon=likelihood.DEFAULT_EPSILON,
                            h: float = FD_STEP) -> float:
    """Largest componentwise ``|g_fd - g| / max(|g|, |g_fd|)`` over all factor entries."""
    analytic = np.concatenate([g.ravel() for g in
                               likelihood.gradients(params, baskets, cfg, epsilon)])
    flat = [params.V, params.B, params.C]
    numeric = []
    for k, F in enumerate(flat):
        for idx in np.ndindex(F.shape):
            vals = []
            for sgn in (1, -1):
                G = F.copy()
                G[idx] += sgn * h
                moved = flat.copy()
                moved[k] = G
                vals.append(likelihood.log_likelihood(LowRankParams(*moved), baskets, cfg,
                                                      epsilon).total)
            numeric.append((vals[0] - vals[1]) / (2 * h))
    numeric = np.array(numeric)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), FD_FLOOR)
    return float(np.max(np.abs(numeric - analytic) / denom)) if numeric.size else 0.0


def gradcheck_sweep(n: int = 50, max_m: int = 8, seed: int = 0, tol: float = 1e-4) -> list:
    """Finite-difference check of the regularized objective on random instances.

    Basket sizes stay at or below ``D`` so the stabilized minors are well conditioned.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        M = int(rng.integers(3, max_m + 1))
        D = int(rng.integers(1, 5))
        params = random_params(rng, M, D, int(rng.integers(0, 5)), scale=0.7)
        baskets = random_baskets(rng, M, min(D, M), int(rng.integers(3, 12)))
        cfg = likelihood.RegularizationConfig(*rng.uniform(0, 1, 3),
                                              lam=rng.integers(0, 5, M).astype(float))
        worst = max(worst, gradient_relative_error(params, baskets, cfg))
    return [CheckResult(f"gradcheck_max_rel_error[n={n},M<={max_m}]", worst <= tol, worst, tol)]


def fisher_sweep(n: int = 20, max_m: int = 6, seed: int = 0, tol: float = 1e-9) -> list:
    """Fisher form equals the negative second derivative; first derivative vanishes at the truth."""
    rng = np.random.default_rng(seed)
    hess, grad = 0.0, 0.0
    for _ in range(n):
        M = int(rng.integers(1, max_m + 1))
        L = random_p_kernel(rng, M)
        H = rng.standard_normal((M, M))
        p = fisher.dpp_probabilities(L)
        hess = max(hess, abs(fisher.fisher_form(L, H) + fisher.d2_f(L, p, H)))
        grad = max(grad, abs(fisher.d1_f(L, p, H)))
    return [CheckResult(f"fisher_form_plus_d2[n={n},M<={max_m}]", hess <= tol, hess, tol),
            CheckResult(f"d1_at_truth[n={n},M<={max_m}]", grad <= tol, grad, tol)]


def counterexample_checks(tol: float = 1e-12) -> list:
    """Nonzero nullspace perturbations at irreducible kernels."""
    out = []
    for probe in fisher.appendix_probes():
        r = fisher.verify_probe(probe, tol)
        ok = r["H_nonzero"] and r["in_nullspace"] and r["irreducible"]
        out.append(CheckResult(f"counterexample[{probe.name}]", ok, r["max_abs_trace"], tol))
    return out


CHECKS = {
    "p0": lambda m, seed: p0_sweep(max_m=m or 8, seed=seed),
    "gradcheck": lambda m, seed: gradcheck_sweep(max_m=m or 8, seed=seed),
    "fisher": lambda m, seed: fisher_sweep(max_m=m or 6, seed=seed),
    "counterexamples": lambda m, seed: counterexample_checks(),
}
