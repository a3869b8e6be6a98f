"""Seeded random Gaussian objects for tests and sweeps."""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from cvnet.symplectic import CovarianceMatrix, GaussianState, symplectic_form


def random_symplectic(n_modes: int, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """``expm(J H)`` with ``H`` a random symmetric matrix of size ``scale``."""
    h = rng.normal(scale=scale, size=(2 * n_modes, 2 * n_modes))
    return expm(symplectic_form(n_modes) @ (0.5 * (h + h.T)))


def random_cm(n_modes: int, rng: np.random.Generator, scale: float = 0.5,
              max_thermal: float = 1.0, pure: bool = False) -> np.ndarray:
    """``S diag(nu) S^T`` with Williamson eigenvalues ``nu in [1/2, 1/2 + max_thermal]``."""
    s = random_symplectic(n_modes, rng, scale)
    nu = np.full(n_modes, 0.5) if pure else 0.5 + max_thermal * rng.random(n_modes)
    v = s @ np.diag(np.repeat(nu, 2)) @ s.T
    return 0.5 * (v + v.T)


def random_state(n_modes: int, rng: np.random.Generator, scale: float = 0.5,
                 max_thermal: float = 1.0, max_shift: float = 0.0, pure: bool = False) -> GaussianState:
    d = rng.uniform(-max_shift, max_shift, size=2 * n_modes) if max_shift else np.zeros(2 * n_modes)
    return GaussianState(d, CovarianceMatrix(random_cm(n_modes, rng, scale, max_thermal, pure)))
