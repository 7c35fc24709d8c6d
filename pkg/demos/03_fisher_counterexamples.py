"""
Where the Fisher information degenerates
========================================

For an irreducible symmetric kernel only ``H = 0`` satisfies
``tr(L_J^{-1} H_J) = 0`` for every subset. Nonsymmetric kernels admit
nonzero directions with zero Fisher information even when irreducible.
"""
import numpy as np

from nsdpp import fisher
from nsdpp.matrix_analysis import is_irreducible

for probe in fisher.appendix_probes():
    res = fisher.nullspace_check(probe, tol=1e-12)
    print(f"{probe.name:28s} irreducible={is_irreducible(probe.L_star)} "
          f"in nullspace={res.in_nullspace} "
          f"Fisher form={fisher.fisher_form(probe.L_star, probe.H):.1e}")

# Dimension of the nullspace for each parameter class at the 3x3 tridiagonal kernel.
L = np.array([[1.0, 0.5, 0.0], [0.5, 1.0, 0.5], [0.0, 0.5, 1.0]])
for kind in (fisher.ThetaKind.SYMMETRIC_PD, fisher.ThetaKind.DIAG_PLUS_SKEW,
             fisher.ThetaKind.ALL_P):
    report = fisher.lemma3_checks(L, fisher.ThetaClass(kind))
    print(f"{kind.value:32s} nullspace dim {report.nullspace_dim}, zero diagonal {report.zero_diagonal}")

# Theorem check on a random kernel: Fisher form equals minus the second derivative.
rng = np.random.default_rng(1)
X = rng.standard_normal((4, 4))
A = rng.standard_normal((4, 4))
L = X @ X.T / 4 + 0.5 * np.eye(4) + 0.5 * (A - A.T)
H = rng.standard_normal((4, 4))
p = fisher.dpp_probabilities(L)
print("fisher form %.6f, -d2f %.6f, d1f %.1e" % (fisher.fisher_form(L, H), -fisher.d2_f(L, p, H),
                                                  fisher.d1_f(L, p, H)))
