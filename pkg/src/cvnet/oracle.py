"""Independent numerical checks of the closed-form fidelities.

Two routes, neither of which touches the ``Gamma`` formula:

* grid quadrature of the teleportation kernel in phase space, and
* Monte-Carlo simulation of the Bell measurement and Bob's correction.

Wigner functions here are normalized over quadratures (``dx dp``), so the
overlap of two single-mode states is ``2 pi * integral(W1 W2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.signal import correlate

from cvnet.errors import GridTooSmall, InvalidInput, NegativeProbability
from cvnet.network import (
    SqueezedProjectorSpec,
    ThreeModeBlocks,
    condition_on_measurement,
    conditional_fidelity,
    traced_fidelity,
)
from cvnet.symplectic import CovarianceMatrix, GaussianState
from cvnet.teleport import optimal_delta

MASS_TOL = 1e-4
# Beyond this many grid points the full array is never materialized.
MAX_DENSE_POINTS = 1 << 22


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform grid on ``[-L, L]`` per axis with cell-centred points.

    Points sit at ``(i - (n - 1)/2) * h`` with ``h = 2L/n``, so the lattice
    is symmetric under negation.
    """

    half_width: float
    points_per_axis: int = 128
    axes: tuple = ("x", "p")

    def __post_init__(self):
        if self.half_width <= 0 or self.points_per_axis < 2:
            raise InvalidInput("grid needs half_width > 0 and at least 2 points per axis")
        object.__setattr__(self, "axes", tuple(self.axes))

    @property
    def spacing(self) -> float:
        return 2 * self.half_width / self.points_per_axis

    @property
    def n_dims(self) -> int:
        return len(self.axes)

    def axis(self) -> np.ndarray:
        n = self.points_per_axis
        return (np.arange(n) - (n - 1) / 2) * self.spacing

    @classmethod
    def for_modes(cls, n_modes: int, half_width: float, points_per_axis: int = 128) -> "PhaseGrid":
        axes = tuple(f"{q}{k + 1}" for k in range(n_modes) for q in ("x", "p"))
        return cls(half_width, points_per_axis, axes)


def default_half_width(*states: GaussianState, n_sigma: float = 6.0) -> float:
    """``max |d_i| + n_sigma * max sqrt(V_ii)`` over the given states."""
    reach = 0.0
    for s in states:
        std = np.sqrt(np.diag(s.cm.entries))
        reach = max(reach, float(np.max(np.abs(s.displacement) + n_sigma * std)))
    return reach


def _gaussian_density(points: np.ndarray, state: GaussianState) -> np.ndarray:
    v = state.cm.entries
    n = v.shape[0]
    prec = np.linalg.inv(v)
    diff = points - state.displacement
    quad = np.einsum("...i,ij,...j->...", diff, prec, diff)
    norm = (2 * np.pi) ** (n / 2) * np.sqrt(np.linalg.det(v))
    return np.exp(-0.5 * quad) / norm


@dataclass(frozen=True)
class NumericWigner:
    """Wigner function on a :class:`PhaseGrid`, stored as a Gaussian mixture.

    ``components`` holds ``(weight, GaussianState)`` pairs; weights may be
    negative (difference of conditional states), which is the only way a
    negative value can appear.  Values are produced on demand so that 4-D
    grids need not be materialized.
    """

    grid: PhaseGrid
    components: tuple = field(default_factory=tuple)

    @property
    def n_modes(self) -> int:
        return self.grid.n_dims // 2

    def evaluate(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        out = np.zeros(pts.shape[:-1])
        for w, s in self.components:
            out += w * _gaussian_density(pts, s)
        return out

    @property
    def values(self) -> np.ndarray:
        n, d = self.grid.points_per_axis, self.grid.n_dims
        if n**d > MAX_DENSE_POINTS:
            raise GridTooSmall(
                f"{n}^{d} grid is too large to materialize; use slab-wise evaluation"
            )
        ax = self.grid.axis()
        mesh = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1)
        return self.evaluate(mesh)

    def integral(self) -> float:
        """Rectangle-rule integral over the grid (slab by slab)."""
        ax = self.grid.axis()
        d = self.grid.n_dims
        h = self.grid.spacing
        rest = np.stack(np.meshgrid(*([ax] * (d - 1)), indexing="ij"), axis=-1) if d > 1 else None
        total = []
        for x0 in ax:
            if rest is None:
                pts = np.array([[x0]])
            else:
                pts = np.concatenate([np.full(rest.shape[:-1] + (1,), x0), rest], axis=-1)
            total.append(float(np.sum(self.evaluate(pts))))
        return math.fsum(total) * h**d


def _marginal_mass_deficit(state: GaussianState, half_width: float) -> float:
    # Union bound on the Gaussian mass outside the box.
    from scipy.special import erfc

    std = np.sqrt(np.diag(state.cm.entries))
    lo = (half_width - state.displacement) / std
    hi = (half_width + state.displacement) / std
    return float(np.sum(0.5 * erfc(lo / np.sqrt(2)) + 0.5 * erfc(hi / np.sqrt(2))))


def wigner_of(state: GaussianState, grid: Optional[PhaseGrid] = None, points_per_axis: int = 128) -> NumericWigner:
    """Gaussian Wigner function ``exp(-(z-d)^T V^{-1} (z-d)/2) / ((2 pi)^N sqrt(det V))``.

    The grid must capture the state's mass: small grids are integrated
    directly (``|integral - 1| <= 1e-4``); large ones are checked with a
    union bound on the marginals and verified again during kernel
    quadrature.
    """
    if grid is None:
        grid = PhaseGrid.for_modes(state.n_modes, default_half_width(state), points_per_axis)
    if grid.n_dims != 2 * state.n_modes:
        raise InvalidInput(f"{grid.n_dims}-D grid for a {state.n_modes}-mode state")
    w = NumericWigner(grid, ((1.0, state),))
    if grid.points_per_axis ** grid.n_dims <= MAX_DENSE_POINTS:
        mass = w.integral()
        if abs(mass - 1.0) > MASS_TOL:
            raise GridTooSmall(f"grid integral of W is {mass:.8f}, not 1")
    elif _marginal_mass_deficit(state, grid.half_width) > 1e-6:
        raise GridTooSmall("grid box misses more than 1e-6 of the Gaussian mass")
    return w


# ---------------------------------------------------------------------------
# Kernel quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransferKernel:
    """Additive-noise density ``K(sigma)`` of the protocol on an integer lattice.

    ``sigma = (x_b - x_a, p_b + p_a)`` is the displacement the channel adds
    to the input before Bob's extra shift; ``values[i, j]`` sits at
    ``(i - (n-1)) h, (j - (n-1)) h``.
    """

    values: np.ndarray
    spacing: float
    mass: float


class _SlabTerms:
    """Pieces of a Gaussian exponent over ``(x_a, p_a, x_b, p_b)`` slabs."""

    def __init__(self, weight, state, ax):
        prec = np.linalg.inv(state.cm.entries)
        d = state.displacement
        self.weight = weight / ((2 * np.pi) ** 2 * np.sqrt(np.linalg.det(state.cm.entries)))
        self.prec = prec
        self.ya = ax - d[0]
        self.yb = ax - d[2]
        pa = ax - d[1]
        pb = ax - d[3]
        self.pa, self.pb = pa, pb
        self.pp = -0.5 * (prec[1, 1] * pa[:, None] ** 2 + 2 * prec[1, 3] * pa[:, None] * pb[None, :]
                          + prec[3, 3] * pb[None, :] ** 2)

    def fill(self, slab, i, k):
        p = self.prec
        y0, y2 = self.ya[i], self.yb[i + k]
        a = -0.5 * (p[0, 0] * y0 * y0 + 2 * p[0, 2] * y0 * y2 + p[2, 2] * y2 * y2)
        u = -(p[0, 1] * y0 + p[2, 1] * y2)
        w = -(p[0, 3] * y0 + p[2, 3] * y2)
        np.add(self.pp[None, :, :], a[:, None, None], out=slab)
        slab += u[:, None, None] * self.pa[None, :, None]
        slab += w[:, None, None] * self.pb[None, None, :]


def transfer_kernel(channel_wigner: NumericWigner) -> TransferKernel:
    """Integrate the channel Wigner function along the Bell-measurement planes.

    ``K(sigma) = integral dt W(t_x, -t_p, sigma_x + t_x, sigma_p + t_p)``.
    With a symmetric cell-centred lattice every integrand point is a grid
    point, so this is an exact rearrangement of the 4-D grid sum.
    """
    if channel_wigner.grid.n_dims != 4:
        raise InvalidInput("the teleportation kernel needs a two-mode channel")
    ax = channel_wigner.grid.axis()
    n = ax.size
    h = channel_wigner.grid.spacing
    out = np.zeros((2 * n - 1, 2 * n - 1))
    jj, ll = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    sum_index = (jj + ll).ravel()  # p_a + p_b on the integer lattice
    comps = [_SlabTerms(w, s, ax) for w, s in channel_wigner.components]
    buf = np.empty((n, n, n))
    for k in range(-(n - 1), n):
        i = np.arange(max(0, -k), min(n, n - k))
        plane = np.zeros((n, n))
        for c in comps:
            slab = buf[: i.size]
            c.fill(slab, i, k)
            np.exp(slab, out=slab)
            plane += c.weight * slab.sum(axis=0)
        out[k + n - 1] = np.bincount(sum_index, weights=plane.ravel(), minlength=2 * n - 1)
    out *= h * h
    mass = float(math.fsum(out.ravel()) * h * h)
    return TransferKernel(out, h, mass)


def _input_state(v_in, d_in=None) -> GaussianState:
    if isinstance(v_in, GaussianState):
        return v_in
    v = np.asarray(v_in, dtype=float)
    return GaussianState(np.zeros(2) if d_in is None else np.asarray(d_in, float), CovarianceMatrix(v))


def kernel_fidelity_from(kernel: TransferKernel, v_in, delta=(0.0, 0.0), grid_axis=None) -> float:
    """Fidelity ``2 pi * sum_sigma K(sigma) A(sigma + sqrt(2) delta)``.

    ``A`` is the input's autocorrelation, computed on the same lattice by
    direct correlation of the sampled input Wigner functions.
    """
    s_in = _input_state(v_in)
    n = (kernel.values.shape[0] + 1) // 2
    h = kernel.spacing
    ax = (np.arange(n) - (n - 1) / 2) * h if grid_axis is None else grid_axis
    mesh = np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1)
    shift = np.sqrt(2) * np.asarray(delta, dtype=float).reshape(2)
    w0 = _gaussian_density(mesh, s_in)
    w1 = _gaussian_density(mesh + shift, s_in)
    # corr[m] = sum_z W(z + m h + shift) W(z)
    auto = correlate(w1, w0, mode="full", method="fft") * h * h
    return float(2 * np.pi * np.sum(kernel.values * auto) * h * h)


def kernel_fidelity(channel_wigner: NumericWigner, v_in, delta=None) -> float:
    """Grid-quadrature fidelity for a pure Gaussian input.

    ``delta`` is Bob's extra displacement in complex-amplitude units; by
    default the Gaussian-optimal value for the channel's first component
    is used.
    """
    kernel = transfer_kernel(channel_wigner)
    if abs(kernel.mass - 1.0) > MASS_TOL:
        raise GridTooSmall(f"kernel mass {kernel.mass:.8f} deviates from 1")
    if delta is None:
        delta = optimal_delta(channel_wigner.components[0][1].displacement)
    return kernel_fidelity_from(kernel, v_in, delta)


def channel_grid(channel: GaussianState, v_in=None, points_per_axis: int = 128) -> PhaseGrid:
    states = [channel]
    if v_in is not None:
        states.append(_input_state(v_in))
    return PhaseGrid.for_modes(2, default_half_width(*states), points_per_axis)


def oracle_fidelity(channel: GaussianState, v_in, delta=None, points_per_axis: int = 128) -> float:
    """Convenience wrapper: sample the channel on a default grid and integrate."""
    grid = channel_grid(channel, v_in, points_per_axis)
    return kernel_fidelity(wigner_of(channel, grid), v_in, delta)


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

_CHUNK = 8192
_S2 = np.sqrt(2.0)


@dataclass(frozen=True)
class MonteCarloResult:
    f_estimate: float
    std_error: float
    n_samples: int


def _bell_statistics(channel: GaussianState, s_in: GaussianState):
    """Moments of Alice's outcomes and Bob's conditional mode."""
    d = np.concatenate([s_in.displacement, channel.displacement])
    v = np.zeros((6, 6))
    v[:2, :2] = s_in.cm.entries
    v[2:, 2:] = channel.cm.entries
    # rows: x_-, p_+, x_b, p_b over (x_in, p_in, x_a, p_a, x_b, p_b)
    lin = np.array(
        [
            [-1 / _S2, 0, 1 / _S2, 0, 0, 0],
            [0, 1 / _S2, 0, 1 / _S2, 0, 0],
            [0, 0, 0, 0, 1, 0],
            [0, 0, 0, 0, 0, 1],
        ]
    )
    mu = lin @ d
    cov = lin @ v @ lin.T
    s_mm, s_bm, s_bb = cov[:2, :2], cov[2:, :2], cov[2:, 2:]
    gain = s_bm @ np.linalg.inv(s_mm)
    cond_cov = s_bb - gain @ s_bm.T
    return mu[:2], s_mm, mu[2:], gain, 0.5 * (cond_cov + cond_cov.T)


def montecarlo_protocol(channel: GaussianState, input_spec, n_samples: int = 10_000,
                        rng_seed: int = 0, delta=None) -> MonteCarloResult:
    """Simulate Bell measurement, classical communication and Bob's displacement.

    Outcomes ``(x_-, p_+)`` are drawn from their Gaussian marginal; Bob's
    mode is then Gaussian with an outcome-dependent mean.  After the shift
    ``sqrt(2) (-x_- + delta_R, p_+ + delta_I)`` each sample contributes its
    overlap with the input.  Samples are drawn in fixed-size chunks from
    spawned seed sequences, so the estimate depends only on the seed.
    """
    if n_samples < 1000:
        raise InvalidInput("use at least 1000 samples")
    s_in = _input_state(input_spec)
    if delta is None:
        delta = optimal_delta(channel.displacement)
    delta = np.asarray(delta, dtype=float).reshape(2)
    mu_m, s_mm, mu_b, gain, cond_cov = _bell_statistics(channel, s_in)
    total = s_in.cm.entries + cond_cov
    prec = np.linalg.inv(total)
    norm = 1.0 / np.sqrt(np.linalg.det(total))
    chol = np.linalg.cholesky(s_mm)

    n_chunks = -(-n_samples // _CHUNK)
    seeds = np.random.SeedSequence(rng_seed).spawn(n_chunks)
    sums, sq_sums = [], []
    remaining = n_samples
    for ss in seeds:
        size = min(_CHUNK, remaining)
        remaining -= size
        rng = np.random.default_rng(ss)
        m = mu_m + rng.standard_normal((size, 2)) @ chol.T
        mean_b = mu_b + (m - mu_m) @ gain.T
        corr = np.column_stack([-m[:, 0] + delta[0], m[:, 1] + delta[1]]) * _S2
        err = mean_b + corr - s_in.displacement
        f = norm * np.exp(-0.5 * np.einsum("ni,ij,nj->n", err, prec, err))
        sums.append(math.fsum(f))
        sq_sums.append(math.fsum(f * f))
    mean = math.fsum(sums) / n_samples
    var = max(math.fsum(sq_sums) / n_samples - mean * mean, 0.0)
    return MonteCarloResult(mean, math.sqrt(var / (n_samples - 1)), n_samples)


# ---------------------------------------------------------------------------
# Non-Gaussian outcome of the dichotomic measurement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DichotomicResult:
    f1: float
    f_assisted: float
    f0: float
    f_traced: float
    p0: float
    delta1: np.ndarray


def _maximize_over_delta(kernel: TransferKernel, v_in, center, half_span, n=21):
    best = (-np.inf, np.asarray(center, float))
    for level in range(2):
        ticks = np.linspace(-half_span, half_span, n)
        c = best[1] if level else np.asarray(center, float)
        for a in ticks:
            for b in ticks:
                d = c + np.array([a, b])
                f = kernel_fidelity_from(kernel, v_in, d)
                if f > best[0]:
                    best = (f, d)
        half_span = 2 * half_span / (n - 1)
    return best


def non_gaussian_branch_fidelity(net, spec: SqueezedProjectorSpec, v_in,
                                 grid: Optional[PhaseGrid] = None,
                                 points_per_axis: int = 48) -> DichotomicResult:
    """Fidelity of the non-Gaussian outcome ``rho1 = (rho_tr - P0 rho0) / P1``.

    The mixture is sampled on the grid by linearity of the Wigner
    representation; Bob's displacement for this outcome is chosen on a
    21 x 21 grid around the Gaussian-branch optimum, refined once.
    """
    if not isinstance(net, ThreeModeBlocks):
        net = ThreeModeBlocks.from_state(net)
    if spec.is_homodyne:
        raise InvalidInput("the dichotomic measurement needs a finitely squeezed projector")
    s_in = _input_state(v_in)
    cond = condition_on_measurement(net, spec)
    p0 = cond.probability
    p1 = 1.0 - p0
    if p1 <= 0:
        raise NegativeProbability(f"P1 = {p1:.3g} must be positive")
    traced = net.traced()
    s0 = cond.state()
    if grid is None:
        grid = PhaseGrid.for_modes(2, default_half_width(traced, s0, s_in), points_per_axis)
    w1 = NumericWigner(grid, ((1.0 / p1, traced), (-p0 / p1, s0)))
    kernel = transfer_kernel(w1)
    if abs(kernel.mass - 1.0) > 1e-3:
        raise GridTooSmall(f"kernel mass {kernel.mass:.6f} deviates from 1")
    d0 = optimal_delta(s0.displacement)
    d_tr = optimal_delta(traced.displacement)
    span = max(1.0, 2 * float(np.max(np.abs(d0 - d_tr))))
    f1, delta1 = _maximize_over_delta(kernel, s_in, d0, span)
    f0 = conditional_fidelity(net, s_in.cm.entries, spec)
    f_tr = traced_fidelity(net, s_in.cm.entries)
    return DichotomicResult(
        f1=float(f1), f_assisted=float(p0 * f0 + p1 * f1), f0=f0, f_traced=f_tr,
        p0=float(p0), delta1=delta1,
    )


# ---------------------------------------------------------------------------
# Exhaustive search over measurement parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSearchResult:
    xi: float
    phi: float
    fidelity: float


def _batched_fidelity(g_tr, sig, c_block, xi, phi):
    """``det(Gamma^tr - Sigma^T (C + V0)^{-1} Sigma)^{-1/2}`` over arrays of ``(xi, phi)``.

    ``xi`` may contain ``0`` or ``inf``; those entries use the homodyne
    projector ``a a^T / (a^T C a)`` on the squeezed axis.
    """
    xi, phi = np.broadcast_arrays(np.asarray(xi, float), np.asarray(phi, float))
    th = np.stack([np.sin(phi), np.cos(phi)], axis=-1)
    eta = np.stack([np.cos(phi), -np.sin(phi)], axis=-1)
    finite = (xi > 0) & np.isfinite(xi)
    m = np.empty(xi.shape + (2, 2))
    if np.any(finite):
        x = xi[finite][:, None, None]
        v0 = 0.5 * x * th[finite][:, :, None] * th[finite][:, None, :]
        v0 += 0.5 / x * eta[finite][:, :, None] * eta[finite][:, None, :]
        m[finite] = np.linalg.inv(c_block + v0)
    for mask, axis in ((np.isinf(xi), eta), (xi == 0, th)):
        if np.any(mask):
            a = axis[mask]
            var = np.einsum("ni,ij,nj->n", a, c_block, a)
            m[mask] = a[:, :, None] * a[:, None, :] / var[:, None, None]
    g0 = g_tr - np.einsum("ki,...kl,lj->...ij", sig, m, sig)
    return np.linalg.det(g0) ** -0.5


def grid_search_measurement(net, v_in, n_xi: int = 400, n_phi: int = 400,
                            log_xi_range: Sequence[float] = (-12.0, 12.0),
                            polish: bool = True) -> GridSearchResult:
    """Brute-force ``max F^(0)(xi, phi)`` on a log-xi by phi grid.

    Each grid point inverts ``C + V0`` numerically, so this shares no algebra
    with the optimizer's vector form.  The homodyne limits ``xi in {0, inf}``
    are extra columns.  The best point is then polished with Nelder-Mead.
    """
    from scipy.optimize import minimize

    from cvnet.network import gamma_traced

    if not isinstance(net, ThreeModeBlocks):
        net = ThreeModeBlocks.from_state(net)
    g_tr = gamma_traced(net, np.asarray(v_in, float))
    sig = net.sigma
    c_block = net.C

    xis = np.concatenate([np.exp(np.linspace(*log_xi_range, n_xi)), [0.0, np.inf]])
    phis = np.linspace(0.0, np.pi, n_phi, endpoint=False)
    xx, pp = np.meshgrid(xis, phis, indexing="ij")
    vals = _batched_fidelity(g_tr, sig, c_block, xx, pp)
    i, j = np.unravel_index(np.nanargmax(vals), vals.shape)
    f, xi, phi = float(vals[i, j]), float(xis[i]), float(phis[j])

    def fid(x, p):
        return float(_batched_fidelity(g_tr, sig, c_block, x, p))

    if polish:
        opts = {"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000}
        if 0 < xi < np.inf:
            res = minimize(lambda t: -fid(np.exp(t[0]), t[1]), [np.log(xi), phi],
                           method="Nelder-Mead", options=opts)
            if -res.fun > f:
                f, xi, phi = float(-res.fun), float(np.exp(res.x[0])), float(res.x[1])
        else:
            res = minimize(lambda t: -fid(xi, t[0]), [phi], method="Nelder-Mead", options=opts)
            if -res.fun > f:
                f, phi = float(-res.fun), float(res.x[0])
    return GridSearchResult(xi=xi, phi=float(phi % np.pi), fidelity=f)
