"""Exact diagonalization, ground states, gap scans, and the bulk-gap test."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateGroundState, InteriorTooLarge
from .fock import FockSpace, LocalOperator, creation_matrix
from .lattice import Lattice

DEGENERACY_TOL = 1e-8
KERNEL_DEFLATION_TOL = 1e-10
#: cap on (dim of the local operator space) in bulk_gap_ratio
OPERATOR_SPACE_CAP = 4096


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude component of each column real positive."""
    out = vecs.copy()
    for j in range(out.shape[1]):
        i = int(np.argmax(np.abs(out[:, j])))
        z = out[i, j]
        if z != 0:
            out[:, j] *= np.conj(z) / abs(z)
    return out


@dataclass
class SpectralData:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, phase-fixed
    gap: float
    ground_projector: np.ndarray

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def ground_vector(self) -> np.ndarray:
        return self.eigenvectors[:, 0]


def diagonalize(h: LocalOperator, degeneracy_tol: float = DEGENERACY_TOL) -> SpectralData:
    """Full Hermitian eigendecomposition with a deterministic phase convention.

    Raises DegenerateGroundState when the gap falls below the tolerance —
    every construction downstream assumes a simple gapped ground state.
    """
    w, v = np.linalg.eigh(h.matrix)
    v = _fix_phases(v)
    gap = float(w[1] - w[0]) if len(w) > 1 else np.inf
    if gap < degeneracy_tol:
        raise DegenerateGroundState(
            f"ground state splitting {gap:.3e} below tolerance {degeneracy_tol:.1e}")
    psi0 = v[:, 0]
    return SpectralData(eigenvalues=w, eigenvectors=v, gap=gap,
                        ground_projector=np.outer(psi0, psi0.conj()))


@dataclass
class GroundState:
    vector: np.ndarray

    def expectation(self, a) -> complex:
        m = a.matrix if isinstance(a, LocalOperator) else a
        return complex(self.vector.conj() @ (m @ self.vector))

    def __call__(self, a) -> complex:
        return self.expectation(a)


def ground_state(spec: SpectralData) -> GroundState:
    return GroundState(spec.ground_vector)


def uniform_gap_scan(build_h, k_list, t_grid, g_required=None,
                     degeneracy_tol=DEGENERACY_TOL) -> list[dict]:
    """Scan the spectral gap over box sizes and times.

    ``build_h(k, t)`` must return the assembled Hamiltonian as a
    LocalOperator.  Near-degeneracy is recorded per entry (``degenerate``
    flag with gap still reported), never raised.  When ``g_required`` is
    given each row carries a pass flag for gap >= g_required.
    """
    rows = []
    for k in k_list:
        for t in t_grid:
            h = build_h(k, t)
            w = np.linalg.eigh(h.matrix)[0]
            gap = float(w[1] - w[0]) if len(w) > 1 else np.inf
            row = {"k": k, "t": t, "gap": gap,
                   "degenerate": gap < degeneracy_tol}
            if g_required is not None:
                row["gap_ok"] = gap >= g_required
            rows.append(row)
    return rows


def _monomial_vectors(space: FockSpace, sub_sites, psi0: np.ndarray,
                      cap: int = OPERATOR_SPACE_CAP):
    """Vectors B_i |psi0> for all normal-ordered monomials over the sub-box.

    The monomials a*_S a_T (S, T subsets of the sub-box modes, factors in
    ascending mode order) form a basis of the subalgebra generated by the
    canonical operators on the sub-box; they are applied as products of
    mode matrices directly to the vector.
    """
    modes = [space.mode_index(s, i) for s in sub_sites for i in range(space.r)]
    m = len(modes)
    if (1 << m) ** 2 > cap:
        raise InteriorTooLarge(
            f"operator space dimension 4^{m} exceeds cap {cap}")
    cre = [creation_matrix(space, mode) for mode in modes]
    ann = [c.conj().T for c in cre]
    vecs = []
    for smask in range(1 << m):
        # psi_S = a*_{s1} a*_{s2} ... |psi0> applied right-to-left
        sel = [i for i in range(m) if (smask >> i) & 1]
        base = psi0
        for i in reversed(sel):
            base = cre[i] @ base
        for tmask in range(1 << m):
            tsel = [i for i in range(m) if (tmask >> i) & 1]
            v = psi0
            for i in reversed(tsel):
                v = ann[i] @ v
            for i in reversed(sel):
                v = cre[i] @ v
            vecs.append(v)
    return np.array(vecs).T  # columns psi_i


def bulk_gap_ratio(h0: LocalOperator, rho0: GroundState, l: int,
                   cap: int = OPERATOR_SPACE_CAP) -> float:
    """Infimum over nonconstant A supported in the centered sub-box of

        rho0(A* [H0, A] ... ) / (rho0(A*A) - |rho0(A)|^2),

    i.e. the excitation energy reachable by interior observables.  Computed
    as the smallest generalized eigenvalue of the two quadratic forms over
    the monomial basis of the sub-box operator space, after deflating the
    kernel of the variance form.  With the sub-box equal to the whole
    lattice this reproduces the spectral gap.
    """
    space = h0.space
    sub = space.lattice.sub_box(l)
    sub = tuple(s for s in sub if s in space.sites)
    psi0 = rho0.vector
    e0 = float(np.real(rho0(h0)))
    psis = _monomial_vectors(space, sub, psi0, cap)  # columns
    # numerator form: <psi_i | (H0 - E0) | psi_j>
    hpsis = h0.matrix @ psis - e0 * psis
    num = psis.conj().T @ hpsis
    # denominator form: overlap minus ground-state component
    overl = psis.conj().T @ psis
    g = psi0.conj() @ psis
    den = overl - np.outer(g.conj(), g)
    num = 0.5 * (num + num.conj().T)
    den = 0.5 * (den + den.conj().T)
    # deflate the kernel of the variance form (constants, annihilated states)
    w, u = np.linalg.eigh(den)
    keep = w > KERNEL_DEFLATION_TOL * max(w[-1], 1.0)
    if not keep.any():
        raise InteriorTooLarge("variance form identically degenerate")
    basis = u[:, keep] / np.sqrt(w[keep])
    reduced = basis.conj().T @ num @ basis
    vals = scipy.linalg.eigvalsh(0.5 * (reduced + reduced.conj().T))
    return float(vals[0])
