"""Gaussian continuous-variable teleportation: state algebra, fidelities and
the measurement-assisted three-mode network optimizer.

Conventions used throughout: quadratures ordered (x1, p1, ..., xN, pN),
vacuum covariance matrix I/2, natural logarithms.
"""

from cvnet.config import TOLERANCES, Tolerances
from cvnet.errors import CVError
from cvnet.symplectic import (
    CovarianceMatrix,
    GaussianState,
    StandardFormI,
    TwoModeBlocks,
    apply_symplectic,
    beam_splitter,
    n_splitter,
    overlap,
    partial_trace,
    partial_transpose,
    squeezer,
    standard_form_I,
    symplectic_form,
    two_mode_symplectic_eigenvalues,
    validate_cm,
    von_neumann_entropy,
    williamson_eigenvalues,
)

__version__ = "0.1.0"

__all__ = [
    "TOLERANCES",
    "Tolerances",
    "CVError",
    "CovarianceMatrix",
    "GaussianState",
    "StandardFormI",
    "TwoModeBlocks",
    "apply_symplectic",
    "beam_splitter",
    "n_splitter",
    "overlap",
    "partial_trace",
    "partial_transpose",
    "squeezer",
    "standard_form_I",
    "symplectic_form",
    "two_mode_symplectic_eigenvalues",
    "validate_cm",
    "von_neumann_entropy",
    "williamson_eigenvalues",
    "__version__",
]
