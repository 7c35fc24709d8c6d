"""Learning low-rank nonsymmetric determinantal point processes.

The kernel is ``L = V V^T + (B C^T - C B^T)``: a PSD part plus a skew part,
which keeps every principal minor nonnegative while allowing positive
correlations between items.
"""

__version__ = "0.1.0"

from .errors import (CapabilityError, ConditioningError, ConfigurationError, DataError,  # noqa: E402
                     DegenerateTrainingError, NSDPPError, NumericalError)
from .kernel import (DenseKernel, KernelRole, LowRankParams, SubsetProbability,  # noqa: E402
                     assemble_L, conditional_kernel, log_subset_prob, marginal_kernel,
                     pair_correlation)

__all__ = [
    "CapabilityError", "ConditioningError", "ConfigurationError", "DataError",
    "DegenerateTrainingError", "NSDPPError", "NumericalError",
    "DenseKernel", "KernelRole", "LowRankParams", "SubsetProbability",
    "assemble_L", "conditional_kernel", "log_subset_prob", "marginal_kernel", "pair_correlation",
]
