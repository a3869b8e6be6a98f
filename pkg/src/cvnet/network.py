"""Three-mode teleportation network: Alice (a), Bob (b), Charlie (c).

Charlie either is traced out (non-assisted protocol) or projects his mode on
a pure squeezed state ``|alpha, xi, phi>`` and tells Bob the outcome
(assisted protocol).  The covariance matrix is laid out as::

    V = [[A,   F,   E],
         [F^T, B,   D],
         [E^T, D^T, C]]
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from cvnet.channels import squeezed_cm
from cvnet.config import TOLERANCES
from cvnet.errors import GOutOfRange, InvalidInput, NotBonaFide, NumericalFailure, WrongShape
from cvnet.symplectic import (
    J2,
    Z2,
    CovarianceMatrix,
    GaussianState,
    overlap,
    validate_cm,
)
from cvnet.teleport import gamma_matrix

HALF_PI = np.pi / 2


def _frozen(a):
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ThreeModeBlocks:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray
    d_a: np.ndarray = field(default_factory=lambda: np.zeros(2))
    d_b: np.ndarray = field(default_factory=lambda: np.zeros(2))
    d_c: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        for name in ("A", "B", "C", "D", "E", "F", "d_a", "d_b", "d_c"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @classmethod
    def from_state(cls, state) -> "ThreeModeBlocks":
        if not isinstance(state, GaussianState):
            state = GaussianState.from_cm(state)
        if state.n_modes != 3:
            raise WrongShape(f"network state must have 3 modes, got {state.n_modes}")
        v, d = state.cm.entries, state.displacement
        return cls(
            A=v[0:2, 0:2], B=v[2:4, 2:4], C=v[4:6, 4:6],
            D=v[2:4, 4:6], E=v[0:2, 4:6], F=v[0:2, 2:4],
            d_a=d[0:2], d_b=d[2:4], d_c=d[4:6],
        )

    def cm(self) -> np.ndarray:
        return np.block(
            [[self.A, self.F, self.E], [self.F.T, self.B, self.D], [self.E.T, self.D.T, self.C]]
        )

    def displacement(self) -> np.ndarray:
        return np.concatenate([self.d_a, self.d_b, self.d_c])

    def state(self) -> GaussianState:
        return GaussianState(self.displacement(), validate_cm(self.cm()))

    def traced(self) -> GaussianState:
        """Reduced Alice-Bob state after tracing Charlie."""
        v = np.block([[self.A, self.F], [self.F.T, self.B]])
        return GaussianState(np.concatenate([self.d_a, self.d_b]), CovarianceMatrix(v))

    @property
    def sigma(self) -> np.ndarray:
        """``Sigma = E^T Z - D^T``."""
        return self.E.T @ Z2 - self.D.T


def _as_net(net) -> ThreeModeBlocks:
    if isinstance(net, ThreeModeBlocks):
        return net
    return ThreeModeBlocks.from_state(net)


def _validated(net) -> ThreeModeBlocks:
    net = _as_net(net)
    validate_cm(net.cm())
    return net


@dataclass(frozen=True)
class SqueezedProjectorSpec:
    """Projection on ``|alpha, xi, phi>``; ``xi`` may be ``0`` or ``inf`` (homodyne).

    ``alpha`` is the measurement state's quadrature mean ``d0``.
    """

    xi: float = 1.0
    phi: float = 0.0
    alpha: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        xi = float(self.xi)
        if np.isnan(xi) or xi < 0:
            raise InvalidInput(f"xi must lie in [0, +inf], got {self.xi}")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "alpha", _frozen(np.reshape(self.alpha, 2)))

    @property
    def is_homodyne(self) -> bool:
        return self.xi == 0.0 or np.isinf(self.xi)

    def cm(self) -> np.ndarray:
        if self.is_homodyne:
            raise InvalidInput("an infinitely squeezed state has no finite CM")
        return squeezed_cm(self.xi, self.phi)


@dataclass(frozen=True)
class ConditionalChannel:
    cm: CovarianceMatrix
    displacement: np.ndarray
    probability: Optional[float]

    def state(self) -> GaussianState:
        return GaussianState(self.displacement, self.cm)


# ---------------------------------------------------------------------------
# Non-assisted protocol
# ---------------------------------------------------------------------------


def gamma_traced(net, v_in) -> np.ndarray:
    """``Gamma^tr = 2 V_in + Z A Z + B - Z F - F^T Z^T``."""
    net = _as_net(net)
    return gamma_matrix(v_in, net.traced().cm.entries)


def traced_fidelity(net, v_in) -> float:
    """Non-assisted fidelity ``(det Gamma^tr)^{-1/2}``."""
    net = _validated(net)
    return float(np.linalg.det(gamma_traced(net, v_in)) ** -0.5)


# ---------------------------------------------------------------------------
# Conditioning on Charlie's Gaussian outcome
# ---------------------------------------------------------------------------


def _adj(m: np.ndarray) -> np.ndarray:
    return J2 @ m @ J2.T


def m_matrix(c_block, v0) -> tuple[np.ndarray, float]:
    """``M = g^{-1} J [2(det V0 + 1/4) V0 + 4 det V0 C] J^T`` and ``g``.

    For a pure ``V0`` (``det V0 = 1/4``) this is ``(C + V0)^{-1}``.
    """
    c = np.asarray(c_block, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    det0 = np.linalg.det(v0)
    g = (
        4 * det0 * np.linalg.det(c)
        + 2 * (det0 + 0.25) * np.trace(v0 @ _adj(c))
        + (det0 + 0.25) ** 2
    )
    if not g > 0.5:
        raise GOutOfRange(f"g = {g:.6g} must exceed 1/2 for physical inputs")
    m = _adj(2 * (det0 + 0.25) * v0 + 4 * det0 * c) / g
    m = 0.5 * (m + m.T)
    if np.linalg.eigvalsh(m)[0] <= 0:
        raise GOutOfRange("M is not positive definite")
    return m, float(g)


def _unit_vectors(phi: float):
    # V0(xi, phi) = (xi/2) th th^T + (1/(2 xi)) eta eta^T
    th = np.array([np.sin(phi), np.cos(phi)])
    eta = np.array([np.cos(phi), -np.sin(phi)])
    return th, eta


def pure_m_matrix(c_block, xi: float, phi: float) -> np.ndarray:
    """``(C + V0(xi, phi))^{-1}`` including the homodyne limits ``xi in {0, inf}``.

    Multiplying numerator and denominator of ``adj(C + V0) / det(C + V0)``
    by ``2 xi`` gives quadratics in ``xi``; the limits keep the leading
    coefficients.
    """
    c = np.asarray(c_block, dtype=float)
    th, eta = _unit_vectors(phi)
    if np.isinf(xi):
        return np.outer(eta, eta) / (eta @ c @ eta)
    if xi == 0.0:
        return np.outer(th, th) / (th @ c @ th)
    num = 2 * xi * _adj(c) + xi * xi * np.outer(eta, eta) + np.outer(th, th)
    den = 2 * xi * (np.linalg.det(c) + 0.25) + xi * xi * (eta @ c @ eta) + th @ c @ th
    return num / den


def _measurement(spec) -> tuple[np.ndarray, np.ndarray, bool, Optional[SqueezedProjectorSpec]]:
    """Normalize ``spec`` to ``(V0 or None, d0, pure, projector spec)``."""
    if isinstance(spec, SqueezedProjectorSpec):
        v0 = None if spec.is_homodyne else spec.cm()
        return v0, spec.alpha, True, spec
    v0, d0 = spec
    v0 = validate_cm(v0).entries
    if v0.shape != (2, 2):
        raise WrongShape("measurement CM must be 2x2")
    pure = abs(np.linalg.det(v0) - 0.25) < 1e-12
    return v0, np.reshape(np.asarray(d0, dtype=float), 2), pure, None


def condition_on_measurement(net, spec, check: bool = True) -> ConditionalChannel:
    """Alice-Bob state after Charlie's Gaussian outcome.

    ``spec`` is a :class:`SqueezedProjectorSpec` or a pair ``(V0, d0)`` for a
    general (possibly mixed) Gaussian measurement operator.  The conditional
    CM does not depend on the outcome ``d0``; only the displacement does.

    ``probability`` is the overlap of Charlie's reduced state with the
    measurement state for finite pure projectors, the homodyne outcome
    density for ``xi in {0, inf}``, and ``None`` for mixed ``V0``.
    """
    net = _validated(net) if check else _as_net(net)
    v0, d0, pure, proj = _measurement(spec)
    if proj is not None:
        m = pure_m_matrix(net.C, proj.xi, proj.phi)
    else:
        m, _ = m_matrix(net.C, v0)
    top = np.vstack([net.E, net.D])  # a,b rows vs c
    v = net.traced().cm.entries - top @ m @ top.T
    v = 0.5 * (v + v.T)
    disp = np.concatenate([net.d_a, net.d_b]) + top @ m @ (d0 - net.d_c)
    if check:
        try:
            cm = validate_cm(v)
        except NotBonaFide as exc:
            raise NotBonaFide(f"conditional CM is unphysical: {exc}", nu=exc.nu) from exc
    else:
        cm = CovarianceMatrix(v)

    if proj is not None and proj.is_homodyne:
        th, eta = _unit_vectors(proj.phi)
        axis = eta if np.isinf(proj.xi) else th
        var = axis @ net.C @ axis
        prob = float(np.exp(-((axis @ (d0 - net.d_c)) ** 2) / (2 * var)) / np.sqrt(2 * np.pi * var))
    elif pure:
        reduced = GaussianState(net.d_c, CovarianceMatrix(net.C))
        prob = overlap(reduced, GaussianState(d0, CovarianceMatrix(v0)))
    else:
        prob = None
    return ConditionalChannel(cm=cm, displacement=_frozen(disp), probability=prob)


def conditional_fidelity(net, v_in, spec) -> float:
    """Gaussian-outcome fidelity ``(det Gamma^(0))^{-1/2}``, ``Gamma^(0) = Gamma^tr - Sigma^T M Sigma``."""
    net = _validated(net)
    v0, _, _, proj = _measurement(spec)
    if proj is not None:
        m = pure_m_matrix(net.C, proj.xi, proj.phi)
    else:
        m, _ = m_matrix(net.C, v0)
    sig = net.sigma
    g0 = gamma_traced(net, v_in) - sig.T @ m @ sig
    return float(np.linalg.det(g0) ** -0.5)


# ---------------------------------------------------------------------------
# Optimal local Gaussian measurement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OptimizerVectors:
    """Quantities that reduce ``F(xi, phi)`` to a ratio of two linear forms.

    ``u = (det C + 1/4, (det Sigma)^2 - Tr(J C J^T U))`` with
    ``U = Sigma J Gamma^tr J^T Sigma^T``, and
    ``k(phi) = (th^T U th, th^T C th)`` for ``th = (sin phi, cos phi)``.
    """

    u: np.ndarray
    U: np.ndarray
    C: np.ndarray
    det_gamma_tr: float

    def k(self, phi):
        phi = np.asarray(phi, dtype=float)
        s, c = np.sin(phi), np.cos(phi)
        kx = self.U[0, 0] * s * s + 2 * self.U[0, 1] * s * c + self.U[1, 1] * c * c
        ky = self.C[0, 0] * s * s + 2 * self.C[0, 1] * s * c + self.C[1, 1] * c * c
        return kx, ky

    def gamma(self, phi):
        kx, ky = self.k(phi)
        return self.u[0] * kx + self.u[1] * ky

    def omega(self, phi):
        kx, ky = self.k(phi)
        kx2, ky2 = self.k(np.asarray(phi) - HALF_PI)
        return 0.5 * (kx * ky2 - ky * kx2)

    def p(self, phi):
        return np.logical_and(self.gamma(phi) < 0, self.gamma(np.asarray(phi) - HALF_PI) < 0)

    def fidelity(self, xi, phi):
        """``F(xi, phi)`` from the vectors, with exact limits at ``xi = 0, inf``."""
        xi = np.asarray(xi, dtype=float)
        phi = np.asarray(phi, dtype=float)
        kx, ky = self.k(phi)
        kx2, ky2 = self.k(phi - HALF_PI)
        with np.errstate(divide="ignore", invalid="ignore"):
            # multiply through by 2 xi
            num = -2 * xi * self.u[1] + xi * xi * kx2 + kx
            den = 2 * xi * self.u[0] + xi * xi * ky2 + ky
            ratio = num / den
        ratio = np.where(np.isinf(xi), kx2 / ky2, ratio)
        ratio = np.where(xi == 0, kx / ky, ratio)
        out = (self.det_gamma_tr - ratio) ** -0.5
        return float(out) if out.ndim == 0 else out


def optimizer_vectors(net, v_in) -> OptimizerVectors:
    net = _validated(net)
    g_tr = gamma_traced(net, v_in)
    sig = net.sigma
    u_mat = sig @ J2 @ g_tr @ J2.T @ sig.T
    u_mat = 0.5 * (u_mat + u_mat.T)
    u = np.array(
        [
            np.linalg.det(net.C) + 0.25,
            np.linalg.det(sig) ** 2 - np.trace(J2 @ net.C @ J2.T @ u_mat),
        ]
    )
    return OptimizerVectors(
        u=_frozen(u), U=_frozen(u_mat), C=_frozen(net.C), det_gamma_tr=float(np.linalg.det(g_tr))
    )


def optimal_xi(phi: float, vectors: OptimizerVectors) -> float:
    """Best squeezing for a fixed phase.

    Interior optimum ``xi_-(phi)`` when ``gamma(phi) < 0`` and
    ``gamma(phi - pi/2) < 0``; otherwise whichever of ``0`` or ``+inf``
    gives the larger fidelity (``0`` on ties).
    """
    if bool(vectors.p(phi)):
        g1 = float(vectors.gamma(phi))
        g2 = float(vectors.gamma(phi - HALF_PI))
        om = float(vectors.omega(phi))
        return (om - np.sqrt(om * om + g2 * g1)) / g2
    f0 = vectors.fidelity(0.0, phi)
    finf = vectors.fidelity(np.inf, phi)
    return 0.0 if f0 >= finf else np.inf


def _best_fidelity(phi, vectors: OptimizerVectors):
    """Vectorized ``F(xi_bar(phi), phi)`` and the matching ``xi``."""
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    p = vectors.p(phi)
    g1 = vectors.gamma(phi)
    g2 = vectors.gamma(phi - HALF_PI)
    om = vectors.omega(phi)
    with np.errstate(invalid="ignore", divide="ignore"):
        xi_int = (om - np.sqrt(np.maximum(om * om + g2 * g1, 0.0))) / g2
    f0 = vectors.fidelity(np.zeros_like(phi), phi)
    finf = vectors.fidelity(np.full_like(phi, np.inf), phi)
    xi_bnd = np.where(f0 >= finf, 0.0, np.inf)
    f_bnd = np.maximum(f0, finf)
    xi_safe = np.where(p, xi_int, 1.0)
    f_int = vectors.fidelity(xi_safe, phi)
    xi = np.where(p, xi_int, xi_bnd)
    f = np.where(p, f_int, f_bnd)
    return f, xi


def stationary_phases(vectors: OptimizerVectors) -> list[tuple[float, str]]:
    """Stationary phases of ``F(0, phi)``, each tagged ``"max"`` or ``"min"``.

    ``F(0, phi)`` depends on ``phi`` only through ``th^T U th / th^T C th``,
    which is stationary when ``th`` is an eigenvector of
    ``tau^T = J C J^T U`` (a generalized eigenproblem for ``(U, C)``).  The
    tag comes from a second-difference test on ``F(0, phi)``.
    """
    from scipy.linalg import eigh

    _, vecs = eigh(vectors.U, vectors.C)
    out = []
    h = 1e-4
    for th in vecs.T:
        phi = float(np.arctan2(th[0], th[1]) % np.pi)
        f = [vectors.fidelity(0.0, phi + t) for t in (-h, 0.0, h)]
        second = f[0] - 2 * f[1] + f[2]
        out.append((phi, "max" if second < 0 else "min"))
    return out


class Branch(str, enum.Enum):
    INTERIOR = "interior"
    BOUNDARY_HOMODYNE = "boundary_homodyne"


@dataclass(frozen=True)
class OptimizerResult:
    xi_star: float
    phi_star: float
    f_star: float
    branch: Branch
    f_traced: float
    gamma: float
    omega: float
    p: bool
    stationary_phases: tuple = ()


def _refine(fun, lo, hi):
    res = minimize_scalar(lambda x: -fun(x), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    return float(res.x)


def _borders(gfun, grid):
    vals = gfun(grid)
    out = []
    for i in range(len(grid) - 1):
        if np.sign(vals[i]) != np.sign(vals[i + 1]) and vals[i] != 0:
            out.append(brentq(gfun, grid[i], grid[i + 1], xtol=1e-14))
    return out


def optimize_measurement(net, v_in, n_grid: int = 720, jobs: int = 1) -> OptimizerResult:
    """Optimal pure local Gaussian measurement on Charlie's mode.

    ``phi`` is scanned on ``n_grid`` points of ``[0, pi)``; the best point,
    the stationary phases of ``F(0, phi)`` and the borders where the
    interior branch switches on or off are refined with bounded scalar
    maximization.  Ties prefer the smaller phase, then a finite ``xi``.
    """
    net = _validated(net)
    vec = optimizer_vectors(net, v_in)
    f_tr = float(vec.det_gamma_tr ** -0.5)

    grid = np.linspace(0.0, np.pi, n_grid, endpoint=False)
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        chunks = np.array_split(grid, jobs)
        with ThreadPoolExecutor(jobs) as pool:
            parts = list(pool.map(lambda g: _best_fidelity(g, vec)[0], chunks))
        f_grid = np.concatenate(parts)
    else:
        f_grid, _ = _best_fidelity(grid, vec)

    def fbar(phi):
        return float(_best_fidelity(phi, vec)[0][0])

    step = np.pi / n_grid
    candidates = list(grid)
    i_best = int(np.argmax(f_grid))
    candidates.append(_refine(fbar, grid[i_best] - step, grid[i_best] + step))
    phases = stationary_phases(vec)
    candidates.extend(phi for phi, _ in phases)
    dense = np.linspace(0.0, np.pi, 4 * n_grid + 1)
    for gfun in (vec.gamma, lambda x: vec.gamma(np.asarray(x) - HALF_PI)):
        for b in _borders(gfun, dense):
            candidates.extend([b - 1e-9, b, b + 1e-9])
            candidates.append(_refine(fbar, b - step, b + step))

    cand = np.mod(np.asarray(candidates, dtype=float), np.pi)
    f_c, xi_c = _best_fidelity(cand, vec)
    finite = np.isfinite(xi_c) & (xi_c > 0)
    # max fidelity, then smaller phase, then finite xi
    order = np.lexsort((~finite, cand, -np.round(f_c, 14)))
    k = int(order[0])
    phi_star, xi_star, f_star = float(cand[k]), float(xi_c[k]), float(f_c[k])
    if f_star < f_tr - 1e-12:
        raise NumericalFailure(f"assisted fidelity {f_star} below non-assisted {f_tr}")
    branch = Branch.INTERIOR if bool(vec.p(phi_star)) else Branch.BOUNDARY_HOMODYNE
    return OptimizerResult(
        xi_star=xi_star,
        phi_star=phi_star,
        f_star=f_star,
        branch=branch,
        f_traced=f_tr,
        gamma=float(vec.gamma(phi_star)),
        omega=float(vec.omega(phi_star)),
        p=bool(vec.p(phi_star)),
        stationary_phases=tuple(phases),
    )


def assisted_spec(result: OptimizerResult, alpha=None) -> SqueezedProjectorSpec:
    return SqueezedProjectorSpec(
        xi=result.xi_star, phi=result.phi_star, alpha=np.zeros(2) if alpha is None else alpha
    )
