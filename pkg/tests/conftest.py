"""Shared oracles: everything here avoids the package's own determinant paths."""
from itertools import combinations

import numpy as np
import pytest

from nsdpp.kernel import LowRankParams
from nsdpp.matrix_analysis import cofactor_det


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_params(rng, M, D, D_prime, scale=1.0):
    return LowRankParams(scale * rng.standard_normal((M, D)),
                         scale * rng.standard_normal((M, D_prime)),
                         scale * rng.standard_normal((M, D_prime)))


def dense_L(params):
    """Assemble with explicit loops over rank-one terms."""
    M = params.M
    L = np.zeros((M, M))
    for k in range(params.D):
        L += np.outer(params.V[:, k], params.V[:, k])
    for k in range(params.D_prime):
        b, c = params.B[:, k], params.C[:, k]
        L += np.outer(b, c) - np.outer(c, b)
    return L


def all_subsets(M):
    return [s for k in range(M + 1) for s in combinations(range(M), k)]


def minor(L, J):
    return 1.0 if len(J) == 0 else cofactor_det(L[np.ix_(J, J)])


def subset_probabilities(L):
    """Map subset -> P(J) by cofactor minors over the enumerated normalizer."""
    M = L.shape[0]
    minors = {J: minor(L, J) for J in all_subsets(M)}
    Z = sum(minors.values())
    return {J: v / Z for J, v in minors.items()}


def inclusion_probability(probs, J):
    J = set(J)
    return sum(p for S, p in probs.items() if J <= set(S))


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def record_criterion(number, passed, detail):
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
