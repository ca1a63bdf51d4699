"""High-precision discrete orthogonal polynomials for hypergeometric weights.

The pipeline is moments -> Hankel factorization -> recurrence coefficients ->
structure matrices, with residual checks for every identity relating them.
"""
__version__ = "0.1.0"

from .estimator import HypergeometricOPS
from .exceptions import (BufferExhausted, DenominatorUnderflow, InsufficientMoments, InvalidSpec, LFOrthoError,
                         NonConvergent, SingularMinor)
from .hankel import SpectralData, eval_polynomials, spectral_pipeline
from .precision import DEFAULT_BITS, PrecisionContext, sum_certified
from .verification import VerificationReport, run_suites
from .weights import FamilySpec, make_pearson, moment_table, weight

__all__ = [
    "HypergeometricOPS", "FamilySpec", "PrecisionContext", "SpectralData", "VerificationReport",
    "spectral_pipeline", "eval_polynomials", "run_suites", "sum_certified", "make_pearson", "moment_table",
    "weight", "DEFAULT_BITS", "LFOrthoError", "InvalidSpec", "NonConvergent", "InsufficientMoments",
    "SingularMinor", "BufferExhausted", "DenominatorUnderflow",
]
