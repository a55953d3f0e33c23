"""The Liouvillian [H, .] and its exact quasi-local inverse on gapped systems."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GapBelowTolerance, ShapeMismatch
from .fock import LocalOperator, locality_profile
from .spectral import SpectralData

GAP_FLOOR = 1e-6


@dataclass
class LiouvillianContext:
    """Spectral data of the instantaneous Hamiltonian plus a gap floor."""

    spectral: SpectralData
    tolerance: float = GAP_FLOOR

    def __post_init__(self):
        if not self.spectral.gap >= self.tolerance > 0:
            raise GapBelowTolerance(
                f"gap {self.spectral.gap:.3e} below floor {self.tolerance:.1e}")


def liouvillian_apply(h, a: LocalOperator) -> LocalOperator:
    """[H, A] on a common Fock space."""
    hm = h.matrix if isinstance(h, LocalOperator) else np.asarray(h, complex)
    if hm.shape != a.matrix.shape:
        raise ShapeMismatch(f"shapes {hm.shape} vs {a.matrix.shape}")
    space = a.space
    return LocalOperator(space, hm @ a.matrix - a.matrix @ hm)


def quasi_local_inverse(ctx: LiouvillianContext, b) -> LocalOperator:
    """Inverse-Liouvillian I(B) via spectral off-diagonal block division.

    In the eigenbasis of H0 with ground vector |0>:

        <0| I(B) |m> = i <0| B |m> / (E0 - Em),   m != 0,

    with the adjoint block mirrored and every other block zero.  This makes
    rho0([ [H0, I(B)] - iB, C ]) = 0 exactly for all C, which is the only
    property the stationarity recursion uses; the excited-excited block is
    the minimal-norm completion (zero).  ||I(B)|| <= ||B||/gap.
    """
    spec = ctx.spectral
    bm = b.matrix if isinstance(b, LocalOperator) else np.asarray(b, complex)
    v = spec.eigenvectors
    w = spec.eigenvalues
    b_eig = v.conj().T @ bm @ v
    out = np.zeros_like(b_eig)
    denom = w[0] - w[1:]
    out[0, 1:] = 1j * b_eig[0, 1:] / denom
    out[1:, 0] = out[0, 1:].conj()  # self-adjoint completion
    m = v @ out @ v.conj().T
    if isinstance(b, LocalOperator):
        return LocalOperator(b.space, m)
    return m


def inverse_locality_report(ctx: LiouvillianContext, b: LocalOperator,
                            l_values) -> list[tuple[int, float]]:
    """Locality profile of I(B): how far the inverse spreads a local input.

    Decay is expected for gapped Hamiltonians but no rate is asserted; the
    table is a diagnostic.
    """
    ib = quasi_local_inverse(ctx, b)
    return locality_profile(ib, l_values)
