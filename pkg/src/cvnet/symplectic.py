"""Phase-space representation of Gaussian states and symplectic operations.

All covariance matrices use the vacuum-variance-1/2 convention and the
quadrature ordering ``(x1, p1, ..., xN, pN)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from cvnet.config import TOLERANCES
from cvnet.errors import (
    DegenerateBlock,
    DimensionMismatch,
    IndexOutOfRange,
    NegativeDiscriminant,
    NotBonaFide,
    NotSymmetric,
    NumericalFailure,
    WrongShape,
)

J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
Z2 = np.diag([1.0, -1.0])


def symplectic_form(n_modes: int) -> np.ndarray:
    """Return ``J^(N)``, the direct sum of N copies of ``[[0, 1], [-1, 0]]``."""
    return np.kron(np.eye(n_modes), J2)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def _mode_slice(k: int) -> slice:
    return slice(2 * k, 2 * k + 2)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CovarianceMatrix:
    """A validated 2N x 2N covariance matrix (vacuum = I/2).

    Build it with :func:`validate_cm`; the constructor itself does no checks.
    """

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries))

    @property
    def n_modes(self) -> int:
        return self.entries.shape[0] // 2

    def block(self, i: int, j: int) -> np.ndarray:
        return self.entries[_mode_slice(i), _mode_slice(j)]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True)
class GaussianState:
    """Displacement (quadrature means) plus covariance matrix."""

    displacement: np.ndarray
    cm: CovarianceMatrix

    def __post_init__(self):
        d = _frozen(self.displacement).reshape(-1)
        if d.shape[0] != 2 * self.cm.n_modes:
            raise DimensionMismatch(
                f"displacement has length {d.shape[0]}, expected {2 * self.cm.n_modes}"
            )
        object.__setattr__(self, "displacement", d)

    @property
    def n_modes(self) -> int:
        return self.cm.n_modes

    @classmethod
    def from_cm(cls, cm, displacement=None) -> "GaussianState":
        if not isinstance(cm, CovarianceMatrix):
            cm = validate_cm(cm)
        if displacement is None:
            displacement = np.zeros(2 * cm.n_modes)
        return cls(np.asarray(displacement, dtype=float), cm)

    @classmethod
    def vacuum(cls, n_modes: int) -> "GaussianState":
        return cls.from_cm(0.5 * np.eye(2 * n_modes))


@dataclass(frozen=True)
class TwoModeBlocks:
    """``V = [[A, C], [C^T, B]]`` for a two-mode covariance matrix."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "C"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @classmethod
    def from_cm(cls, cm) -> "TwoModeBlocks":
        v = np.asarray(cm, dtype=float)
        if v.shape != (4, 4):
            raise WrongShape(f"two-mode blocks need a 4x4 matrix, got {v.shape}")
        return cls(v[:2, :2], v[2:, 2:], v[:2, 2:])

    def assemble(self) -> np.ndarray:
        return np.block([[self.A, self.C], [self.C.T, self.B]])


@dataclass(frozen=True)
class StandardFormI:
    """Local invariants ``(a, b, c, c')`` and the local symplectic reaching them.

    ``local_transform @ V @ local_transform.T`` has the standard-form-I shape.
    """

    a: float
    b: float
    c: float
    c_prime: float
    local_transform: np.ndarray

    def matrix(self) -> np.ndarray:
        a, b, c, cp = self.a, self.b, self.c, self.c_prime
        return np.array(
            [[a, 0, c, 0], [0, a, 0, cp], [c, 0, b, 0], [0, cp, 0, b]], dtype=float
        )


# ---------------------------------------------------------------------------
# Validation and spectra
# ---------------------------------------------------------------------------


def _check_square_even(m: np.ndarray) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2 or m.shape[0] == 0:
        raise WrongShape(f"expected a non-empty 2N x 2N matrix, got shape {m.shape}")


def _symplectic_spectrum(v: np.ndarray) -> np.ndarray:
    # i * L^T J L is Hermitian with eigenvalues +-nu_k when V = L L^T.
    n = v.shape[0] // 2
    try:
        chol = np.linalg.cholesky(v)
    except np.linalg.LinAlgError as exc:
        raise NotBonaFide("covariance matrix is not positive definite", nu=0.0) from exc
    k = chol.T @ symplectic_form(n) @ chol
    try:
        ev = np.linalg.eigvalsh(1j * k)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure("symplectic eigenvalue solve did not converge") from exc
    return np.sort(ev[n:])


def validate_cm(matrix, tol=TOLERANCES) -> CovarianceMatrix:
    """Check that ``matrix`` is a physical (bona fide) covariance matrix.

    Raises
    ------
    WrongShape
        Not a square matrix of even size.
    NotSymmetric
        Asymmetric beyond ``tol.symmetry`` (relative).
    NotBonaFide
        Some symplectic eigenvalue is below ``1/2 - tol.bona_fide``; the
        offending value is attached as ``exc.nu``.
    """
    m = np.array(matrix, dtype=float)
    _check_square_even(m)
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > tol.symmetry * scale:
        raise NotSymmetric("covariance matrix is not symmetric")
    m = 0.5 * (m + m.T)
    nu = _symplectic_spectrum(m)
    if nu[0] < 0.5 - tol.bona_fide:
        raise NotBonaFide(
            f"symplectic eigenvalue {nu[0]:.12g} violates nu >= 1/2", nu=nu[0]
        )
    return CovarianceMatrix(m)


def _as_matrix(cm) -> np.ndarray:
    if isinstance(cm, GaussianState):
        return cm.cm.entries
    return np.asarray(cm, dtype=float)


def williamson_eigenvalues(cm) -> np.ndarray:
    """Symplectic eigenvalues ``nu_1 <= ... <= nu_N`` of a covariance matrix.

    Computed as the moduli of the eigenvalues of ``J V``, one per conjugate
    pair.
    """
    v = _as_matrix(cm)
    _check_square_even(v)
    return _symplectic_spectrum(0.5 * (v + v.T))


def two_mode_symplectic_eigenvalues(blocks) -> tuple[float, float]:
    """Closed-form ``(nu_minus, nu_plus)`` of a two-mode covariance matrix.

    Uses the global invariants ``Delta = det A + det B + 2 det C`` and
    ``det V``.  Near a double root (``nu_- ~ nu_+``, e.g. pure states) the
    quadratic formula loses half the digits, so the general eigen-solve is
    used there instead.
    """
    if not isinstance(blocks, TwoModeBlocks):
        blocks = TwoModeBlocks.from_cm(_as_matrix(blocks))
    delta = np.linalg.det(blocks.A) + np.linalg.det(blocks.B) + 2 * np.linalg.det(blocks.C)
    v = blocks.assemble()
    return _nu_pair(delta, np.linalg.det(v), v)


# Below this ratio sqrt(disc)/Delta the closed form is ill-conditioned.
_DOUBLE_ROOT = 1e-4


def _nu_pair(delta: float, det_v: float, v=None) -> tuple[float, float]:
    disc = delta**2 - 4 * det_v
    if disc < -1e-12 * max(1.0, delta**2):
        raise NegativeDiscriminant(f"Delta^2 - 4 det V = {disc:.3g} < 0")
    root = np.sqrt(max(disc, 0.0))
    if v is not None and root < _DOUBLE_ROOT * abs(delta):
        lo, hi = _symplectic_spectrum(v)
        return float(lo), float(hi)
    hi = (delta + root) / 2
    lo = det_v / hi  # avoids cancellation in (delta - root) / 2
    if lo < 0:
        raise NegativeDiscriminant("negative squared symplectic eigenvalue")
    return float(np.sqrt(lo)), float(np.sqrt(hi))


# ---------------------------------------------------------------------------
# Symplectic matrices
# ---------------------------------------------------------------------------


def _rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def squeezer(r: float, phi: float = 0.0) -> np.ndarray:
    """Single-mode squeezer ``S(r e^{2 i phi})`` as a 2x2 symplectic matrix.

    ``phi = 0`` squeezes position (vacuum -> ``diag(e^{-2r}, e^{2r})/2``);
    ``phi = pi/2`` squeezes momentum.
    """
    rot = _rotation(phi)
    return rot @ np.diag([np.exp(-r), np.exp(r)]) @ rot.T


def beam_splitter(theta: float, i: int, j: int, n_modes: int) -> np.ndarray:
    """Lossless beam splitter ``a_i -> a_i cos + a_j sin``, ``a_j -> a_i sin - a_j cos``.

    The same real orthogonal mixing acts on positions and momenta, so the
    result is symplectic.
    """
    if n_modes < 2:
        raise IndexOutOfRange("a beam splitter needs at least two modes")
    for k in (i, j):
        if not 0 <= k < n_modes:
            raise IndexOutOfRange(f"mode index {k} outside 0..{n_modes - 1}")
    if i == j:
        raise IndexOutOfRange("beam splitter needs two distinct modes")
    c, s = np.cos(theta), np.sin(theta)
    mix = np.eye(n_modes)
    mix[i, i], mix[i, j] = c, s
    mix[j, i], mix[j, j] = s, -c
    return np.kron(mix, np.eye(2))


def n_splitter(n_modes: int) -> np.ndarray:
    """N-splitter: ``B_{N-1,N}(pi/4) ... B_{2,3}(acos 1/sqrt(N-1)) B_{1,2}(acos 1/sqrt(N))``.

    ``B_{1,2}`` acts first.
    """
    if n_modes < 2:
        raise IndexOutOfRange("an N-splitter needs at least two modes")
    total = np.eye(2 * n_modes)
    for k in range(n_modes - 1):
        # acos(1/sqrt 2) is not bitwise pi/4
        theta = np.pi / 4 if n_modes - k == 2 else np.arccos(1.0 / np.sqrt(n_modes - k))
        total = beam_splitter(theta, k, k + 1, n_modes) @ total
    return total


def local_symplectic(blocks: Sequence[np.ndarray]) -> np.ndarray:
    """Direct sum of single-mode 2x2 symplectic matrices."""
    n = len(blocks)
    out = np.zeros((2 * n, 2 * n))
    for k, b in enumerate(blocks):
        out[_mode_slice(k), _mode_slice(k)] = b
    return out


def embed_single_mode(m: np.ndarray, mode: int, n_modes: int) -> np.ndarray:
    if not 0 <= mode < n_modes:
        raise IndexOutOfRange(f"mode index {mode} outside 0..{n_modes - 1}")
    out = np.eye(2 * n_modes)
    out[_mode_slice(mode), _mode_slice(mode)] = m
    return out


def is_symplectic(m, tol=TOLERANCES) -> bool:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
        return False
    j = symplectic_form(m.shape[0] // 2)
    return bool(np.max(np.abs(m @ j @ m.T - j)) < tol.symplectic)


def apply_symplectic(state: GaussianState, m) -> GaussianState:
    """``V -> M V M^T``, ``d -> M d``."""
    m = np.asarray(m, dtype=float)
    size = 2 * state.n_modes
    if m.shape != (size, size):
        raise DimensionMismatch(f"symplectic of shape {m.shape} on a {size}-dim state")
    v = m @ state.cm.entries @ m.T
    v = 0.5 * (v + v.T)
    # Congruence by a symplectic matrix preserves bona fide-ness.
    return GaussianState(m @ state.displacement, CovarianceMatrix(v))


# ---------------------------------------------------------------------------
# Reductions
# ---------------------------------------------------------------------------


def _check_modes(modes, n_modes: int) -> list[int]:
    modes = [int(k) for k in modes]
    for k in modes:
        if not 0 <= k < n_modes:
            raise IndexOutOfRange(f"mode index {k} outside 0..{n_modes - 1}")
    return modes


def _quad_indices(modes) -> list[int]:
    return [q for k in modes for q in (2 * k, 2 * k + 1)]


def partial_trace(state: GaussianState, keep_modes) -> GaussianState:
    keep = _check_modes(keep_modes, state.n_modes)
    if not keep or len(set(keep)) != len(keep):
        raise IndexOutOfRange("keep_modes must be non-empty and without repeats")
    idx = _quad_indices(keep)
    v = state.cm.entries[np.ix_(idx, idx)]
    return GaussianState(state.displacement[idx], CovarianceMatrix(v))


def partial_transpose(cm, modes) -> np.ndarray:
    """Mirror-reflect the momentum of each listed mode: ``Lambda V Lambda``.

    The result is a plain array because it need not be bona fide.
    """
    v = np.array(_as_matrix(cm), dtype=float)
    _check_square_even(v)
    flips = np.ones(v.shape[0])
    for k in _check_modes(modes, v.shape[0] // 2):
        flips[2 * k + 1] = -1.0
    return flips[:, None] * v * flips[None, :]


# ---------------------------------------------------------------------------
# Entropy and overlaps
# ---------------------------------------------------------------------------


def _g(x: float) -> float:
    hi = x + 0.5
    lo = x - 0.5
    return hi * np.log(hi) - (lo * np.log(lo) if lo > 0 else 0.0)


def von_neumann_entropy(cm, tol=TOLERANCES) -> float:
    """Sum of ``g(nu_k)`` with ``g(x) = (x+1/2) ln(x+1/2) - (x-1/2) ln(x-1/2)``."""
    total = 0.0
    for nu in williamson_eigenvalues(cm):
        if nu - 0.5 <= tol.bona_fide:
            continue
        total += _g(float(nu))
    return total


def overlap(s1: GaussianState, s2: GaussianState) -> float:
    """``Tr(rho1 rho2) = exp(-d^T (V1+V2)^{-1} d / 2) / sqrt(det(V1+V2))``."""
    if s1.n_modes != s2.n_modes:
        raise DimensionMismatch(f"{s1.n_modes}-mode vs {s2.n_modes}-mode overlap")
    total = s1.cm.entries + s2.cm.entries
    diff = s1.displacement - s2.displacement
    quad = diff @ np.linalg.solve(total, diff)
    return float(np.exp(-0.5 * quad) / np.sqrt(np.linalg.det(total)))


def purity(state: GaussianState) -> float:
    return overlap(state, state)


# ---------------------------------------------------------------------------
# Standard form I
# ---------------------------------------------------------------------------


def _symmetric_power(a: np.ndarray, p: float) -> np.ndarray:
    w, u = np.linalg.eigh(a)
    return (u * w**p) @ u.T


def standard_form_I(cm) -> StandardFormI:
    """Reduce a two-mode CM to ``V^I(a, b, c, c')`` by local symplectics.

    Each diagonal block is first made proportional to the identity with the
    local symplectic ``sqrt(a) A^{-1/2}``; local rotations then diagonalize
    the correlation block.  Ties are broken so that ``|c| >= |c'|`` and
    ``c >= 0``.
    """
    v = _as_matrix(cm)
    if v.shape != (4, 4):
        raise WrongShape(f"standard form I needs a 4x4 matrix, got {v.shape}")
    blocks = TwoModeBlocks.from_cm(v)
    det_a, det_b = np.linalg.det(blocks.A), np.linalg.det(blocks.B)
    if det_a <= 0 or det_b <= 0:
        raise DegenerateBlock("local blocks must have positive determinant")
    a, b = np.sqrt(det_a), np.sqrt(det_b)
    s_a = np.sqrt(a) * _symmetric_power(blocks.A, -0.5)
    s_b = np.sqrt(b) * _symmetric_power(blocks.B, -0.5)
    u, sv, wt = np.linalg.svd(s_a @ blocks.C @ s_b.T)
    w = wt.T
    sv = sv.copy()
    # Rotations only: fold reflections into the sign of the smaller value.
    if np.linalg.det(u) < 0:
        u[:, 1] *= -1
        sv[1] *= -1
    if np.linalg.det(w) < 0:
        w[:, 1] *= -1
        sv[1] *= -1
    local = local_symplectic([u.T @ s_a, w.T @ s_b])
    return StandardFormI(float(a), float(b), float(sv[0]), float(sv[1]), _frozen(local))
