"""Separability tests and entanglement quantifiers for two-mode Gaussian states."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from cvnet.config import TOLERANCES
from cvnet.errors import WrongShape
from cvnet.symplectic import GaussianState, TwoModeBlocks, _nu_pair, validate_cm

# Search window for q^2 in the Duan test.
Q2_MIN, Q2_MAX = 1e-6, 1e6


@dataclass(frozen=True)
class DuanWitness:
    q: float
    lhs: float  # Var L(q) + Var M(q)
    rhs: float  # q^2 + q^-2


@dataclass(frozen=True)
class EntanglementReport:
    nu_tilde_minus: float
    log_negativity: float
    ppt_separable: bool
    duan_witness: Optional[DuanWitness] = None
    aleph: Optional[float] = None


def _two_mode_cm(cm) -> np.ndarray:
    if isinstance(cm, GaussianState):
        cm = cm.cm
    v = validate_cm(cm).entries
    if v.shape != (4, 4):
        raise WrongShape(f"expected a two-mode CM, got shape {v.shape}")
    return v


_LAMBDA = np.array([1.0, 1.0, 1.0, -1.0])


def pt_min_symplectic_eigenvalue(cm) -> float:
    """Smallest symplectic eigenvalue of the partially transposed CM.

    Partial transposition only flips the sign of ``det C``, giving
    ``Delta~ = det A + det B - 2 det C``.
    """
    v = _two_mode_cm(cm)
    blocks = TwoModeBlocks.from_cm(v)
    delta_t = np.linalg.det(blocks.A) + np.linalg.det(blocks.B) - 2 * np.linalg.det(blocks.C)
    pt = v * np.outer(_LAMBDA, _LAMBDA)
    return _nu_pair(delta_t, np.linalg.det(v), pt)[0]


def log_negativity(cm) -> float:
    """``max(0, -ln(2 nu~_-))``, natural log."""
    return max(0.0, -np.log(2 * pt_min_symplectic_eigenvalue(cm)))


def _duan_terms(v: np.ndarray):
    # f(q) = alpha q^2 + beta / q^2 + 2 sign(q) kappa
    alpha = v[0, 0] + v[1, 1] - 1.0
    beta = v[2, 2] + v[3, 3] - 1.0
    kappa = v[0, 2] - v[1, 3]
    return alpha, beta, kappa


def duan_lhs(cm, q: float) -> float:
    """``Var L(q) + Var M(q)`` for ``L = |q| x_A + x_B / q``, ``M = |q| p_A - p_B / q``."""
    v = np.asarray(getattr(cm, "entries", cm), dtype=float)
    s = np.sign(q)
    var_l = q * q * v[0, 0] + v[2, 2] / (q * q) + 2 * s * v[0, 2]
    var_m = q * q * v[1, 1] + v[3, 3] / (q * q) - 2 * s * v[1, 3]
    return float(var_l + var_m)


def duan_test(cm, tol=TOLERANCES) -> Optional[DuanWitness]:
    """Look for ``q`` with ``Var L(q) + Var M(q) < q^2 + q^-2``.

    The minimum over ``t = q^2`` is analytic on each sign branch; a log grid
    over the clipped window guards the degenerate ``alpha = 0`` or
    ``beta = 0`` cases.
    """
    v = _two_mode_cm(cm)
    alpha, beta, kappa = _duan_terms(v)
    sign = -1.0 if kappa > 0 else 1.0

    def f(t):
        return alpha * t + beta / t + 2 * sign * kappa

    candidates = list(np.geomspace(Q2_MIN, Q2_MAX, 241))
    if alpha > 0 and beta > 0:
        candidates.append(float(np.clip(np.sqrt(beta / alpha), Q2_MIN, Q2_MAX)))
    t_best = min(candidates, key=f)
    if f(t_best) >= -tol.duan:
        return None
    q = sign * np.sqrt(t_best)
    return DuanWitness(float(q), duan_lhs(v, q), float(q * q + 1 / (q * q)))


def epr_variances(cm) -> tuple[float, float]:
    """``(Var X_-, Var P_+)`` with ``X_- = x_A - x_B`` and ``P_+ = p_A + p_B``."""
    v = np.asarray(getattr(cm, "entries", cm), dtype=float)
    var_x = v[0, 0] + v[2, 2] - 2 * v[0, 2]
    var_p = v[1, 1] + v[3, 3] + 2 * v[1, 3]
    return float(var_x), float(var_p)


def epr_aleph(cm, atol: float = 1e-9) -> Optional[float]:
    """Common EPR variance when ``Var X_- == Var P_+``, otherwise ``None``.

    ``aleph < 1`` marks an EPR channel.
    """
    var_x, var_p = epr_variances(_two_mode_cm(cm))
    if abs(var_x - var_p) > atol:
        return None
    return 0.5 * (var_x + var_p)


def entanglement_report(cm) -> EntanglementReport:
    v = _two_mode_cm(cm)
    nu = pt_min_symplectic_eigenvalue(v)
    return EntanglementReport(
        nu_tilde_minus=nu,
        log_negativity=max(0.0, -np.log(2 * nu)),
        ppt_separable=bool(nu >= 0.5 - TOLERANCES.bona_fide),
        duan_witness=duan_test(v),
        aleph=epr_aleph(v),
    )
