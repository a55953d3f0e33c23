"""Fermionic Fock spaces, CAR operators and locality tools.

Occupation basis convention: basis index b encodes mode m as bit m,
``|b> = a*_{m1} a*_{m2} ... |vac>`` with m1 < m2 < ... over the occupied
modes.  Creation operators therefore carry a Jordan-Wigner sign string
over all lower-ordered modes.  Modes are ordered by (site, internal index)
with sites in the lattice's canonical lexicographic order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    ModeOutOfRange,
    OddOperatorEmbedding,
    OddOperatorInput,
    SupportNotContained,
)
from .lattice import Lattice, Site

FLAG_TOL = 1e-12


def operator_norm(m: np.ndarray) -> float:
    """Largest singular value via a Hermitian eigensolve of M^dag M."""
    if m.size == 0:
        return 0.0
    w = np.linalg.eigvalsh(m.conj().T @ m)
    return float(np.sqrt(max(w[-1], 0.0)))


@dataclass(frozen=True)
class FockSpace:
    """Fock space over l2(X, C^r) for a site subset X of a lattice."""

    lattice: Lattice
    r: int = 1
    sites: tuple[Site, ...] = None  # defaults to the whole lattice

    def __post_init__(self):
        if self.sites is None:
            object.__setattr__(self, "sites", tuple(self.lattice.sites))
        else:
            sites = tuple(sorted(tuple(s) for s in self.sites))
            for s in sites:
                if not self.lattice.contains(s):
                    raise SupportNotContained(f"site {s} not in lattice")
            object.__setattr__(self, "sites", sites)

    @property
    def modes(self) -> list[tuple[Site, int]]:
        return [(s, i) for s in self.sites for i in range(self.r)]

    @property
    def n_modes(self) -> int:
        return self.r * len(self.sites)

    @property
    def dim(self) -> int:
        return 1 << self.n_modes

    def mode_index(self, site: Site, i: int) -> int:
        site = tuple(site)
        if site not in self.sites or not 0 <= i < self.r:
            raise ModeOutOfRange(f"mode ({site}, {i}) not in Fock space")
        return self.sites.index(site) * self.r + i


@dataclass(frozen=True)
class LocalOperator:
    """Dense operator on a Fock space, with its genuine support recorded."""

    space: FockSpace
    matrix: np.ndarray
    support: tuple[Site, ...] = None

    def __post_init__(self):
        if self.support is None:
            object.__setattr__(self, "support", self.space.sites)
        else:
            object.__setattr__(
                self, "support", tuple(sorted(tuple(s) for s in self.support)))
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"matrix shape {m.shape} != Fock dim {self.space.dim}")
        object.__setattr__(self, "matrix", m)

    @cached_property
    def norm(self) -> float:
        return operator_norm(self.matrix)

    @cached_property
    def is_self_adjoint(self) -> bool:
        scale = self.norm or 1.0
        return operator_norm(self.matrix - self.matrix.conj().T) <= FLAG_TOL * scale

    @cached_property
    def is_even(self) -> bool:
        p = parity_diag(self.space)
        scale = self.norm or 1.0
        asym = self.matrix - p[:, None] * self.matrix * p[None, :]
        return operator_norm(asym) <= FLAG_TOL * scale

    @cached_property
    def is_number_conserving(self) -> bool:
        n = number_diag(self.space)
        scale = self.norm or 1.0
        comm = n[:, None] * self.matrix - self.matrix * n[None, :]
        return operator_norm(comm) <= FLAG_TOL * scale

    def dagger(self) -> "LocalOperator":
        return LocalOperator(self.space, self.matrix.conj().T, self.support)

    def __add__(self, other):
        _check_same_space(self, other)
        return LocalOperator(self.space, self.matrix + other.matrix,
                             tuple(set(self.support) | set(other.support)))

    def __sub__(self, other):
        _check_same_space(self, other)
        return LocalOperator(self.space, self.matrix - other.matrix,
                             tuple(set(self.support) | set(other.support)))

    def __mul__(self, scalar):
        return LocalOperator(self.space, self.matrix * scalar, self.support)

    __rmul__ = __mul__

    def __matmul__(self, other):
        _check_same_space(self, other)
        return LocalOperator(self.space, self.matrix @ other.matrix,
                             tuple(set(self.support) | set(other.support)))


def _check_same_space(a: LocalOperator, b: LocalOperator):
    if a.space.dim != b.space.dim:
        from .errors import ShapeMismatch
        raise ShapeMismatch(
            f"operator dims {a.space.dim} vs {b.space.dim} incompatible")


# -- diagonal helpers ------------------------------------------------------

def _popcounts(n_modes: int) -> np.ndarray:
    b = np.arange(1 << n_modes, dtype=np.uint32)
    counts = np.zeros(b.shape, dtype=np.int64)
    while b.any():
        counts += b & 1
        b >>= 1
    return counts


def number_diag(space: FockSpace) -> np.ndarray:
    """Diagonal of the total number operator in the occupation basis."""
    return _popcounts(space.n_modes).astype(float)


def parity_diag(space: FockSpace) -> np.ndarray:
    """Diagonal of (-1)^N."""
    return np.where(_popcounts(space.n_modes) % 2 == 0, 1.0, -1.0)


def number_operator(space: FockSpace) -> LocalOperator:
    return LocalOperator(space, np.diag(number_diag(space)))


def identity(space: FockSpace) -> LocalOperator:
    return LocalOperator(space, np.eye(space.dim), support=())


# -- CAR operators ---------------------------------------------------------

def creation_matrix(space: FockSpace, mode: int) -> np.ndarray:
    """Matrix of a*_mode with the Jordan-Wigner string over lower modes."""
    if not 0 <= mode < space.n_modes:
        raise ModeOutOfRange(f"mode {mode} out of range")
    dim = space.dim
    b = np.arange(dim)
    empty = (b >> mode) & 1 == 0
    src = b[empty]
    dst = src | (1 << mode)
    lower = src & ((1 << mode) - 1)
    signs = np.where(_popcount_array(lower) % 2 == 0, 1.0, -1.0)
    m = np.zeros((dim, dim), dtype=complex)
    m[dst, src] = signs
    return m


def _popcount_array(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.int64).copy()
    c = np.zeros_like(x)
    while x.any():
        c += x & 1
        x >>= 1
    return c


def creation_op(space: FockSpace, site: Site, i: int = 0) -> LocalOperator:
    m = space.mode_index(site, i)
    return LocalOperator(space, creation_matrix(space, m), support=(tuple(site),))


def annihilation_op(space: FockSpace, site: Site, i: int = 0) -> LocalOperator:
    return creation_op(space, site, i).dagger()


def density_op(space: FockSpace, site: Site, i: int = 0) -> LocalOperator:
    c = creation_op(space, site, i)
    return LocalOperator(space, c.matrix @ c.matrix.conj().T, support=(tuple(site),))


# -- mode reordering and embeddings ---------------------------------------

def reorder_sign_matrix(n_modes: int, new_order: list[int]) -> np.ndarray:
    """Signed permutation R with R[c, b] = <c_new | b_old>.

    ``new_order[j]`` is the old index of the mode placed at new position j.
    The sign is the parity of the permutation restricted to the occupied
    modes (anticommuting the creation operators into the new order).
    """
    dim = 1 << n_modes
    rows = np.empty(dim, dtype=np.int64)
    signs = np.empty(dim)
    for b in range(dim):
        occupied_new = [j for j in range(n_modes) if (b >> new_order[j]) & 1]
        c = 0
        for j in occupied_new:
            c |= 1 << j
        seq = [new_order[j] for j in occupied_new]
        inv = sum(1 for p in range(len(seq)) for q in range(p + 1, len(seq))
                  if seq[p] > seq[q])
        rows[b] = c
        signs[b] = -1.0 if inv % 2 else 1.0
    r = np.zeros((dim, dim))
    r[rows, np.arange(dim)] = signs
    return r


def embed_local(a: LocalOperator, big: FockSpace) -> LocalOperator:
    """Embed an even operator into a larger Fock space (identity elsewhere)."""
    small = a.space
    if small.r != big.r:
        raise SupportNotContained("internal degrees r differ")
    if not set(small.sites) <= set(big.sites):
        raise SupportNotContained(
            f"support {small.sites} not contained in target sites")
    if not a.is_even:
        raise OddOperatorEmbedding("only even operators can be embedded")
    if small.sites == big.sites:
        return LocalOperator(big, a.matrix, a.support)
    inner = [big.mode_index(s, i) for (s, i) in small.modes]
    outer = [m for m in range(big.n_modes) if m not in inner]
    r = reorder_sign_matrix(big.n_modes, inner + outer)
    wide = np.kron(np.eye(1 << len(outer)), a.matrix)
    return LocalOperator(big, r.T @ wide @ r, support=a.support)


def conditional_expectation(a: LocalOperator, sub_sites) -> LocalOperator:
    """Normalized partial trace onto the subalgebra of ``sub_sites``.

    Norm-one projection for even operators: E[A] = tr_out(A)/2^{n_out}
    tensored with the identity, computed in a signed mode reordering that
    brings the sub-box modes to the front.
    """
    if not a.is_even:
        raise OddOperatorInput("conditional expectation defined for even operators")
    space = a.space
    sub = tuple(sorted(tuple(s) for s in sub_sites))
    for s in sub:
        if s not in space.sites:
            raise SupportNotContained(f"site {s} not in Fock space")
    inner = [space.mode_index(s, i) for s in sub for i in range(space.r)]
    outer = [m for m in range(space.n_modes) if m not in inner]
    if not outer:
        return a
    r = reorder_sign_matrix(space.n_modes, inner + outer)
    m_new = r @ a.matrix @ r.T
    dl, dh = 1 << len(inner), 1 << len(outer)
    blocks = m_new.reshape(dh, dl, dh, dl)
    traced = np.einsum("abac->bc", blocks) / dh
    e_new = np.kron(np.eye(dh), traced)
    return LocalOperator(space, r.T @ e_new @ r, support=sub)


def locality_profile(a: LocalOperator, l_values) -> list[tuple[int, float]]:
    """Decay sequence (l, ||A - E_{Lambda_l}[A]||) over centered sub-boxes."""
    out = []
    for l in l_values:
        sub = a.space.lattice.sub_box(l)
        sub = tuple(s for s in sub if s in a.space.sites)
        diff = a.matrix - conditional_expectation(a, sub).matrix
        out.append((l, operator_norm(diff)))
    return out


# -- random operators (test panels) ---------------------------------------

def random_even_operator(space: FockSpace, rng, self_adjoint: bool = True,
                         support=None) -> LocalOperator:
    """Haar-agnostic random even (optionally self-adjoint) operator.

    With ``support`` given, the operator is built on the sub-Fock-space and
    embedded, so it is genuinely local.
    """
    if support is not None:
        small = FockSpace(space.lattice, space.r, tuple(support))
        op = random_even_operator(small, rng, self_adjoint)
        return embed_local(op, space)
    d = space.dim
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    p = parity_diag(space)
    m = 0.5 * (m + p[:, None] * m * p[None, :])
    if self_adjoint:
        m = 0.5 * (m + m.conj().T)
    return LocalOperator(space, m)
