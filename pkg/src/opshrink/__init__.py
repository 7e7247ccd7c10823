"""Shrinkage estimation for kernel covariance operators and shrunk HSIC tests.

Library surface:

* :mod:`opshrink.kernels`    kernels, gram matrices, centering, bandwidths
* :mod:`opshrink.operators`  empirical operators, HS geometry, spectra
* :mod:`opshrink.shrinkage`  the lw / scose / fcose estimators
* :mod:`opshrink.hsic`       plain and shrunk HSIC, permutation tests
* :mod:`opshrink.synthdata`  seeded synthetic benchmark distributions
* :mod:`opshrink.experiments`  Monte Carlo studies behind the CLI

The ``opshrink`` command exposes the experiment harness; see the README.
"""

__version__ = "0.1.0"

from .kernels import (
    GramPair,
    KernelSpec,
    as_sample,
    center,
    cross_centered_gram,
    eval_kernel,
    gram,
    gram_pair,
    median_heuristic,
)
from .operators import (
    EmpiricalOperator,
    RkhsFunction,
    SpectralDecomposition,
    align_sign,
    eval_function,
    hs_distance_sq,
    hs_inner,
    hs_norm_sq,
    plain_operator,
    rkhs_diff_norm_sq,
    singular_spectrum,
)
from .shrinkage import (
    ShrinkageResult,
    apply_shrinkage,
    b2,
    d2,
    fcose_beta,
    fcose_fit,
    fcose_loocv_bruteforce,
    fcose_loocv_curve,
    mc_oracle_check,
    rho_lw,
    rho_scose,
)
from .hsic import (
    TestOutcome,
    h0_h1_ratio,
    hsic_fcose,
    hsic_lw,
    hsic_n,
    hsic_scose,
    permutation_test,
    shrinkage_scatter,
)
from .synthdata import DistributionSpec, rejection_sample, sample

__all__ = [
    "GramPair",
    "KernelSpec",
    "as_sample",
    "center",
    "cross_centered_gram",
    "eval_kernel",
    "gram",
    "gram_pair",
    "median_heuristic",
    "EmpiricalOperator",
    "RkhsFunction",
    "SpectralDecomposition",
    "align_sign",
    "eval_function",
    "hs_distance_sq",
    "hs_inner",
    "hs_norm_sq",
    "plain_operator",
    "rkhs_diff_norm_sq",
    "singular_spectrum",
    "ShrinkageResult",
    "apply_shrinkage",
    "b2",
    "d2",
    "fcose_beta",
    "fcose_fit",
    "fcose_loocv_bruteforce",
    "fcose_loocv_curve",
    "mc_oracle_check",
    "rho_lw",
    "rho_scose",
    "TestOutcome",
    "h0_h1_ratio",
    "hsic_fcose",
    "hsic_lw",
    "hsic_n",
    "hsic_scose",
    "permutation_test",
    "shrinkage_scatter",
    "DistributionSpec",
    "rejection_sample",
    "sample",
    "__version__",
]
