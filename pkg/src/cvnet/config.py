"""Numerical tolerances shared by every module."""

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    symmetry: float = 1e-12     # relative, for V == V.T
    bona_fide: float = 1e-9     # slack on nu_k >= 1/2
    symplectic: float = 1e-10   # max-norm of M J M^T - J
    invariant: float = 1e-9     # generic absolute check
    duan: float = 1e-12         # f(q) < -duan counts as a witness

    def with_overrides(self, **kwargs) -> "Tolerances":
        return replace(self, **kwargs)


TOLERANCES = Tolerances()
