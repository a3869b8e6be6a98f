"""Closed-form teleportation fidelity through a two-mode Gaussian channel.

Displacement conventions
------------------------
States carry plain quadrature means ``d``.  Bob's extra displacement
``delta`` is a complex amplitude ``delta_R + i delta_I`` (it shifts his
quadratures by ``sqrt(2) * (delta_R, delta_I)``), and the channel means enter
through ``d_j = d_quadrature_j / sqrt(2)``, i.e. the complex-amplitude
components ``(Re <a>, Im <a>, Re <b>, Im <b>)``.  With these units the
shift penalty is ``Q = h^T Gamma^{-1} h`` with
``h = (-delta_R + d1 - d3, -delta_I - d2 - d4)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from cvnet.entanglement import epr_variances, pt_min_symplectic_eigenvalue
from cvnet.errors import InvalidInput, WrongShape
from cvnet.symplectic import (
    Z2,
    GaussianState,
    TwoModeBlocks,
    apply_symplectic,
    validate_cm,
)


class Method(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    ORACLE = "oracle"


@dataclass(frozen=True)
class FidelityReport:
    fidelity: float
    gamma: np.ndarray
    delta: np.ndarray
    method: Method = Method.CLOSED_FORM
    nu_tilde_minus: Optional[float] = None


def _input_cm(v_in) -> np.ndarray:
    if isinstance(v_in, GaussianState):
        v_in = v_in.cm.entries
    v = np.asarray(v_in, dtype=float)
    if v.shape != (2, 2):
        raise InvalidInput(f"input CM must be 2x2, got {v.shape}")
    validate_cm(v)
    return v


def _blocks(channel) -> TwoModeBlocks:
    if isinstance(channel, TwoModeBlocks):
        return channel
    if isinstance(channel, GaussianState):
        channel = channel.cm.entries
    v = validate_cm(channel).entries
    if v.shape != (4, 4):
        raise WrongShape(f"channel must be a two-mode CM, got {v.shape}")
    return TwoModeBlocks.from_cm(v)


def gamma_matrix(v_in, channel_blocks) -> np.ndarray:
    """``Gamma = 2 V_in + Z A Z + B - Z C - C^T Z^T``."""
    vin = _input_cm(v_in)
    b = _blocks(channel_blocks)
    g = 2 * vin + Z2 @ b.A @ Z2 + b.B - Z2 @ b.C - b.C.T @ Z2.T
    return 0.5 * (g + g.T)


def gamma_from_epr_variances(v_in, channel_cm) -> np.ndarray:
    """Same Gamma, built from the EPR-operator covariances of the channel."""
    vin = _input_cm(v_in)
    v = np.asarray(getattr(channel_cm, "entries", channel_cm), dtype=float)
    var_x, var_p = epr_variances(v)
    # <dX_- dP_+> with X_- = x_a - x_b, P_+ = p_a + p_b
    cov_xp = v[0, 1] + v[0, 3] - v[2, 1] - v[2, 3]
    return np.array(
        [
            [2 * vin[0, 0] + var_x, 2 * vin[0, 1] - cov_xp],
            [2 * vin[1, 0] - cov_xp, 2 * vin[1, 1] + var_p],
        ]
    )


def _amplitude_means(d_channel) -> np.ndarray:
    d = np.asarray(d_channel, dtype=float).reshape(-1)
    if d.shape != (4,):
        raise InvalidInput(f"channel displacement must have length 4, got {d.shape}")
    return d / np.sqrt(2)


def optimal_delta(d_channel) -> np.ndarray:
    """Bob's extra displacement cancelling the channel shift.

    ``d_channel`` is the plain quadrature mean ``(x_a, p_a, x_b, p_b)``;
    the result is ``(d1 - d3, -d2 - d4)`` in complex-amplitude units.
    """
    d1, d2, d3, d4 = _amplitude_means(d_channel)
    return np.array([d1 - d3, -d2 - d4]) + 0.0  # no negative zeros


def shift_vector(d_channel, delta) -> np.ndarray:
    d1, d2, d3, d4 = _amplitude_means(d_channel)
    dr, di = np.asarray(delta, dtype=float).reshape(2)
    return np.array([-dr + d1 - d3, -di - d2 - d4])


def fidelity(v_in, channel: GaussianState, delta=None) -> FidelityReport:
    """Teleportation fidelity of a pure Gaussian input.

    With ``delta=None`` Bob uses :func:`optimal_delta` and the result is
    ``1/sqrt(det Gamma)``; otherwise ``exp(-Q(delta)) / sqrt(det Gamma)``.
    """
    if not isinstance(channel, GaussianState):
        channel = GaussianState.from_cm(channel)
    gamma = gamma_matrix(v_in, channel.cm.entries)
    det_g = np.linalg.det(gamma)
    if delta is None:
        delta = optimal_delta(channel.displacement)
        f = 1.0 / np.sqrt(det_g)
    else:
        delta = np.asarray(delta, dtype=float).reshape(2)
        h = shift_vector(channel.displacement, delta)
        q = h @ np.linalg.solve(gamma, h)
        f = np.exp(-q) / np.sqrt(det_g)
    return FidelityReport(
        fidelity=float(f),
        gamma=gamma,
        delta=np.asarray(delta, dtype=float),
        method=Method.CLOSED_FORM,
        nu_tilde_minus=pt_min_symplectic_eigenvalue(channel.cm),
    )


def coherent_fidelity_standard_form(a: float, b: float, c: float, c_prime: float) -> float:
    """``[(1 + Var X_-)(1 + Var P_+)]^{-1/2}`` for a channel ``V^I(a, b, c, c')``."""
    v = np.array(
        [[a, 0, c, 0], [0, a, 0, c_prime], [c, 0, b, 0], [0, c_prime, 0, b]], dtype=float
    )
    validate_cm(v)
    var_x = a + b - 2 * c
    var_p = a + b + 2 * c_prime
    return float(1.0 / np.sqrt((1 + var_x) * (1 + var_p)))


def coherent_fidelity_of_r(r: float) -> float:
    """TMSV coherent-state fidelity ``e^{2r} / (1 + e^{2r})``."""
    return float(1.0 / (1.0 + np.exp(-2 * r)))


def squeezing_for_fidelity(target: float, r_max: float = 20.0) -> float:
    """Invert the TMSV coherent fidelity curve by bracketed root finding."""
    if not 0.5 <= target < 1.0:
        raise InvalidInput("target fidelity must lie in [1/2, 1)")
    if target == 0.5:
        return 0.0
    return float(
        brentq(lambda r: coherent_fidelity_of_r(r) - target, 0.0, r_max, xtol=1e-14, rtol=1e-15)
    )


def _local_squeeze(kappa: float) -> np.ndarray:
    return np.diag([np.exp(kappa), np.exp(-kappa), np.exp(kappa), np.exp(-kappa)])


@dataclass(frozen=True)
class LocalSqueezeResult:
    kappa: float
    fidelity: float
    nu_tilde_minus: float
    kappa_analytic: Optional[float] = None


def local_squeeze_optimize(channel: GaussianState, v_in=None, bound: float = 10.0) -> LocalSqueezeResult:
    """Maximize the fidelity over local squeezings ``S = diag(e^k, e^-k, e^k, e^-k)``.

    The stationary point of ``det Gamma(kappa)`` is bracketed on
    ``[-bound, bound]`` and found with Brent's method.  The slope
    ``tr(adj(Gamma) dGamma/dkappa)`` is exact, not a finite difference.
    """
    if v_in is None:
        v_in = 0.5 * np.eye(2)
    if not isinstance(channel, GaussianState):
        channel = GaussianState.from_cm(channel)

    def det_gamma(kappa):
        v = apply_symplectic(channel, _local_squeeze(kappa)).cm.entries
        return np.linalg.det(gamma_matrix(v_in, v))

    # d/dk of V' = S V S^T is (D V' + V' D) with D = diag(1,-1,1,-1).
    dmat = np.diag([1.0, -1.0, 1.0, -1.0])
    vin = _input_cm(v_in)

    def slope(kappa):
        vk = apply_symplectic(channel, _local_squeeze(kappa)).cm.entries
        dv = dmat @ vk + vk @ dmat
        b = TwoModeBlocks.from_cm(vk)
        g = 2 * vin + Z2 @ b.A @ Z2 + b.B - Z2 @ b.C - b.C.T @ Z2.T
        db = TwoModeBlocks.from_cm(dv)
        dg = Z2 @ db.A @ Z2 + db.B - Z2 @ db.C - db.C.T @ Z2.T
        # d det G = tr(adj(G) dG)
        adj = np.array([[g[1, 1], -g[0, 1]], [-g[1, 0], g[0, 0]]])
        return float(np.trace(adj @ dg))

    lo, hi = -bound, bound
    if slope(lo) < 0 < slope(hi):
        kappa = brentq(slope, lo, hi, xtol=1e-13, rtol=1e-15)
    else:
        res = minimize_scalar(det_gamma, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-10})
        kappa = float(res.x)
    f = 1.0 / np.sqrt(det_gamma(kappa))
    v = channel.cm.entries
    analytic = None
    # Thermal-TMSV shape: diagonal blocks, a-b symmetric.
    if np.allclose(v[:2, :2], v[2:, 2:]) and abs(v[0, 1]) < 1e-12 and abs(v[0, 3]) < 1e-12:
        n_a, n_b = _thermal_noises(v)
        if n_a > 0 and n_b > 0:
            analytic = float(np.log(n_a / n_b) / 4)
    return LocalSqueezeResult(
        kappa=float(kappa),
        fidelity=float(f),
        nu_tilde_minus=pt_min_symplectic_eigenvalue(channel.cm),
        kappa_analytic=analytic,
    )


def _thermal_noises(v: np.ndarray) -> tuple[float, float]:
    # x-block is [[s, d], [d, s]] with s + d = n_a e^{2r}, s - d = n_b e^{-2r};
    # p-block gives n_a e^{-2r}, n_b e^{2r}.  Products remove r.
    na2 = (v[0, 0] + v[0, 2]) * (v[1, 1] + v[1, 3])
    nb2 = (v[0, 0] - v[0, 2]) * (v[1, 1] - v[1, 3])
    return float(np.sqrt(max(na2, 0.0))), float(np.sqrt(max(nb2, 0.0)))
