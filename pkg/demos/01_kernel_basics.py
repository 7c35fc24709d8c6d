"""
Kernels with positive correlations
==================================

A symmetric DPP kernel can only encode repulsion. Adding a skew part
``B C^T - C B^T`` keeps every principal minor nonnegative while letting some
pairs attract each other.
"""
import numpy as np

from nsdpp import LowRankParams, assemble_L, conditional_kernel, log_subset_prob, marginal_kernel
from nsdpp.kernel import pair_correlations, powerset
from nsdpp.matrix_analysis import classify

rng = np.random.default_rng(0)
M = 6
params = LowRankParams(rng.standard_normal((M, 3)), rng.standard_normal((M, 2)),
                       rng.standard_normal((M, 2)))
L = assemble_L(params)

# Every principal minor is nonnegative, checked exhaustively.
report = classify(L.entries)
print("P0:", report.is_P0, " smallest minor: %.3g" % report.min_principal_minor)

# Subset probabilities sum to one over all 2^M subsets.
total = sum(np.exp(log_subset_prob(L, J).log_prob) for J in powerset(M))
print("sum of P(J): %.12f" % total)

# Pair covariances -K_ij K_ji: positive entries are attractive pairs.
K = marginal_kernel(L)
C = pair_correlations(K)
iu = np.triu_indices(M, 1)
print("attractive pairs:", int(np.sum(C[iu] > 0)), "of", len(iu[0]))

# The symmetric part alone never produces attraction.
K_sym = marginal_kernel(assemble_L(LowRankParams(params.V)))
print("attractive pairs without the skew part:", int(np.sum(pair_correlations(K_sym)[iu] > 0)))

# Conditioning on an observed item gives a kernel over the remaining catalog.
LJ = conditional_kernel(L, [0])
print("items still available:", LJ.index_map.tolist())
print("scores for the next item:", np.round(np.diag(LJ.entries), 3).tolist())
