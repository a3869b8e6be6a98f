"""Constructors for the channel states used by the teleportation protocols."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from cvnet.errors import InvalidInput, NegativeSqueezing
from cvnet.symplectic import (
    GaussianState,
    apply_symplectic,
    embed_single_mode,
    local_symplectic,
    n_splitter,
    squeezer,
    validate_cm,
)


class ChannelKind(str, enum.Enum):
    TMSV = "tmsv"
    THERMAL_TMSV = "thermal_tmsv"
    NMSV = "nmsv"
    CHEAP = "cheap"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ChannelSpec:
    kind: ChannelKind
    r: float = 0.0
    n_a: float = 0.5
    n_b: float = 0.5
    n_modes: int = 2
    extra: dict = field(default_factory=dict)

    def build(self) -> GaussianState:
        if self.kind is ChannelKind.TMSV:
            return tmsv(self.r)
        if self.kind is ChannelKind.THERMAL_TMSV:
            return thermal_tmsv(self.r, self.n_a, self.n_b)
        if self.kind is ChannelKind.NMSV:
            return nmsv(self.n_modes, self.r)
        if self.kind is ChannelKind.CHEAP:
            return cheap_three_mode(self.r)
        raise InvalidInput("custom channels are loaded from JSON, not built")


def _check_r(r: float) -> float:
    r = float(r)
    if not np.isfinite(r) or r < 0:
        raise NegativeSqueezing(f"squeezing must be a finite r >= 0, got {r}")
    return r


def tmsv(r: float) -> GaussianState:
    """Two-mode squeezed vacuum: ``V = [[cosh 2r I, sinh 2r Z], [sinh 2r Z, cosh 2r I]] / 2``."""
    r = _check_r(r)
    ch, sh = np.cosh(2 * r) / 2, np.sinh(2 * r) / 2
    v = np.array(
        [[ch, 0, sh, 0], [0, ch, 0, -sh], [sh, 0, ch, 0], [0, -sh, 0, ch]], dtype=float
    )
    return GaussianState.from_cm(v)


def thermal_tmsv(r: float, n_a: float, n_b: float) -> GaussianState:
    """TMSV with thermal noises ``n_a``, ``n_b`` entering through modes a and b.

    Note that ``n_a = n_b = 1/2`` reproduces the pure :func:`tmsv`; the
    symplectic eigenvalues of the result are ``n_a`` and ``n_b``, so values
    below 1/2 are rejected as unphysical.
    """
    r = _check_r(r)
    if n_a <= 0 or n_b <= 0:
        raise InvalidInput("thermal noises must be positive")
    ep, em = np.exp(2 * r), np.exp(-2 * r)
    sx = n_a * ep + n_b * em
    dx = n_a * ep - n_b * em
    sp = n_a * em + n_b * ep
    dp = n_a * em - n_b * ep
    v = 0.5 * np.array(
        [[sx, 0, dx, 0], [0, sp, 0, dp], [dx, 0, sx, 0], [0, dp, 0, sp]], dtype=float
    )
    return GaussianState.from_cm(v)


def nmsv(n_modes: int, r: float) -> GaussianState:
    """N-mode squeezed vacuum.

    Mode 1 is squeezed in momentum, modes 2..N in position, then the
    N-splitter mixes them.
    """
    if n_modes < 2:
        raise InvalidInput("NMSV needs at least two modes")
    r = _check_r(r)
    sq = [squeezer(r, np.pi / 2)] + [squeezer(r, 0.0)] * (n_modes - 1)
    state = apply_symplectic(GaussianState.vacuum(n_modes), local_symplectic(sq))
    return _revalidate(apply_symplectic(state, n_splitter(n_modes)))


def cheap_three_mode(r: float) -> GaussianState:
    """Three-mode state with only mode 1 squeezed (in momentum) before the 3-splitter."""
    r = _check_r(r)
    s1 = embed_single_mode(squeezer(r, np.pi / 2), 0, 3)
    state = apply_symplectic(GaussianState.vacuum(3), s1)
    return _revalidate(apply_symplectic(state, n_splitter(3)))


def squeezed_cm(xi: float, phi: float) -> np.ndarray:
    """Pure single-mode CM of a squeezed state with ``xi = exp(2r)``.

    ``V0 = [[xi s^2 + c^2/xi, (xi - 1/xi) s c], [(xi - 1/xi) s c, xi c^2 + s^2/xi]] / 2``
    with ``s = sin(phi)``, ``c = cos(phi)``.
    """
    if not xi > 0 or not np.isfinite(xi):
        raise InvalidInput(f"xi must be finite and positive, got {xi}")
    s, c = np.sin(phi), np.cos(phi)
    return 0.5 * np.array(
        [
            [xi * s * s + c * c / xi, (xi - 1 / xi) * s * c],
            [(xi - 1 / xi) * s * c, xi * c * c + s * s / xi],
        ]
    )


def input_state(kind: str = "coherent", alpha=0.0, xi: float = 1.0, phi: float = 0.0) -> GaussianState:
    """Pure single-mode input.

    ``alpha`` is the complex amplitude, so the quadrature mean is
    ``sqrt(2) (Re alpha, Im alpha)``.  For ``kind='squeezed'`` the CM is
    :func:`squeezed_cm` with ``xi = exp(2r)``.
    """
    alpha = complex(alpha)
    d = np.sqrt(2) * np.array([alpha.real, alpha.imag])
    if kind == "coherent":
        v = 0.5 * np.eye(2)
    elif kind == "squeezed":
        v = squeezed_cm(xi, phi)
    else:
        raise InvalidInput(f"unknown input kind {kind!r}")
    return GaussianState.from_cm(v, d)


def _revalidate(state: GaussianState) -> GaussianState:
    return GaussianState(state.displacement, validate_cm(state.cm.entries))
