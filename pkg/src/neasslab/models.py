"""Model parameters, the example Hamiltonian builder, and the free-fermion oracle.

The model class covers hopping insulators with on-site potentials, optional
density-density interactions, and a chemical potential:

    H0 = sum_{x!=y} a*_x T(x-y) a_y + sum_x a*_x phi(x) a_x
         + sum_{x<y} n_x W(d(x,y)) n_y - mu N.

With W = 0 the model is a free-fermion system and everything is checkable
against the one-body matrix h = T + phi - mu: the many-body ground energy is
the sum of the negative one-body levels and the many-body gap is the
smallest |e_i|.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonHermitianHopping
from .fock import FockSpace, LocalOperator, creation_matrix
from .interactions import Interaction
from .lattice import Lattice
from .switching import Constant, Switching

HERMITICITY_TOL = 1e-12


def _as_matrix(v, r):
    m = np.atleast_2d(np.asarray(v, dtype=complex))
    if m.shape != (r, r):
        raise ValueError(f"expected {r}x{r} matrix, got shape {m.shape}")
    return m


@dataclass
class ModelParams:
    """Translation-invariant model data.

    T maps displacements to r x r hopping matrices with T(-x) = T(x)^dag;
    phi maps sites to Hermitian on-site matrices; W maps distances >= 1 to
    density-density couplings; mu is the chemical potential.
    """

    r: int = 1
    T: dict = field(default_factory=dict)       # displacement tuple -> r x r
    phi: dict = field(default_factory=dict)     # site tuple -> r x r Hermitian
    W: dict = field(default_factory=dict)       # int distance -> r x r
    mu: float = 0.0

    def __post_init__(self):
        self.T = {tuple(k): _as_matrix(v, self.r) for k, v in self.T.items()}
        self.phi = {tuple(k): _as_matrix(v, self.r) for k, v in self.phi.items()}
        self.W = {int(k): _as_matrix(v, self.r) for k, v in self.W.items()}
        for k, v in self.phi.items():
            if np.abs(v - v.conj().T).max() > HERMITICITY_TOL:
                raise ValueError(f"phi({k}) not Hermitian")

    def hopping(self, disp):
        """T at a displacement, filling T(-x) = T(x)^dag when only one of the
        pair is declared; validates Hermiticity when both are."""
        disp = tuple(disp)
        neg = tuple(-c for c in disp)
        if disp in self.T and neg in self.T:
            if np.abs(self.T[disp] - self.T[neg].conj().T).max() > HERMITICITY_TOL:
                raise NonHermitianHopping(
                    f"T({disp}) != T({neg})^dagger beyond {HERMITICITY_TOL}")
            return self.T[disp]
        if disp in self.T:
            return self.T[disp]
        if neg in self.T:
            return self.T[neg].conj().T
        return None


def _wrap_hoppings(p: ModelParams, lat: Lattice) -> dict:
    """Collect declared hoppings keyed by minimal wrapped displacement."""
    table = {}
    for disp in p.T:
        if all(c == 0 for c in disp):
            raise ValueError("zero displacement belongs in phi, not T")
        wrapped = lat.displacement(disp, tuple(0 for _ in disp))
        t = p.hopping(disp)
        if wrapped in table:
            if np.abs(table[wrapped] - t).max() > HERMITICITY_TOL:
                raise NonHermitianHopping(
                    f"displacements alias to {wrapped} with conflicting T")
        else:
            table[wrapped] = t
    # complete under negation so every unordered pair gets exactly one term
    for disp in list(table):
        neg = tuple(-c for c in disp)
        if neg not in table:
            table[neg] = table[disp].conj().T
        elif np.abs(table[neg] - table[disp].conj().T).max() > HERMITICITY_TOL:
            raise NonHermitianHopping(f"T({neg}) != T({disp})^dagger")
    return table


def build_example_hamiltonian(lat: Lattice, space: FockSpace,
                              p: ModelParams) -> Interaction:
    """Assemble the hopping-insulator Hamiltonian as an interaction.

    Hopping terms are grouped per unordered pair {x, y} so each term is
    self-adjoint; displacements are wrapped modulo the boundary condition.
    """
    r = p.r
    inter = Interaction(lat)
    hop = _wrap_hoppings(p, lat)
    for x in p.phi:
        if not lat.contains(x):
            from .errors import SupportNotContained
            raise SupportNotContained(f"phi site {x} not in lattice")

    # hopping: one term per unordered pair, a*_x T(x-y) a_y + h.c.
    done = set()
    for x in lat.sites:
        for disp, t in hop.items():
            y = tuple(a - b for a, b in zip(x, disp))
            if lat.boundary.value == "torus":
                period = 2 * lat.radius + 1
                y = tuple(((c + lat.radius) % period) - lat.radius for c in y)
            if not lat.contains(y) or y == x:
                continue
            key = frozenset((x, y))
            if key in done:
                continue
            done.add(key)
            sp = FockSpace(lat, r, (x, y))
            m = np.zeros((sp.dim, sp.dim), dtype=complex)
            for i in range(r):
                cx = creation_matrix(sp, sp.mode_index(x, i))
                for j in range(r):
                    cy = creation_matrix(sp, sp.mode_index(y, j))
                    m += t[i, j] * (cx @ cy.conj().T)
            m = m + m.conj().T
            inter.add((x, y), LocalOperator(sp, m, support=(x, y)))

    # on-site: a*_x phi(x) a_x  -  mu n_x
    for x in lat.sites:
        phi_x = p.phi.get(tuple(x))
        if phi_x is None and p.mu == 0.0:
            continue
        sp = FockSpace(lat, r, (x,))
        m = np.zeros((sp.dim, sp.dim), dtype=complex)
        for i in range(r):
            ci = creation_matrix(sp, sp.mode_index(x, i))
            ni = ci @ ci.conj().T
            m -= p.mu * ni
            if phi_x is not None:
                for j in range(r):
                    cj = creation_matrix(sp, sp.mode_index(x, j))
                    m += phi_x[i, j] * (ci @ cj.conj().T)
        inter.add((x,), LocalOperator(sp, m, support=(x,)))

    # density-density: n_x W(d(x,y)) n_y per unordered pair, Hermitian part
    if p.W:
        sites = lat.sites
        for a in range(len(sites)):
            for b in range(a + 1, len(sites)):
                x, y = sites[a], sites[b]
                w = p.W.get(lat.metric(x, y))
                if w is None:
                    continue
                sp = FockSpace(lat, r, (x, y))
                m = np.zeros((sp.dim, sp.dim), dtype=complex)
                for i in range(r):
                    cx = creation_matrix(sp, sp.mode_index(x, i))
                    nx = cx @ cx.conj().T
                    for j in range(r):
                        cy = creation_matrix(sp, sp.mode_index(y, j))
                        ny = cy @ cy.conj().T
                        m += w[i, j].real * (nx @ ny)
                inter.add((x, y), LocalOperator(sp, m, support=(x, y)))
    return inter


# -- free-fermion oracle ---------------------------------------------------

def one_body_matrix(lat: Lattice, p: ModelParams) -> np.ndarray:
    """One-particle Hamiltonian h[(x,i),(y,j)] = T(x-y) + phi delta - mu delta."""
    r = p.r
    n = lat.n_sites * r
    h = np.zeros((n, n), dtype=complex)
    hop = _wrap_hoppings(p, lat)
    for a, x in enumerate(lat.sites):
        for b, y in enumerate(lat.sites):
            if x == y:
                blk = -p.mu * np.eye(r, dtype=complex)
                phi_x = p.phi.get(tuple(x))
                if phi_x is not None:
                    blk = blk + phi_x
            else:
                t = hop.get(lat.displacement(x, y))
                if t is None:
                    continue
                blk = t
            h[a * r:(a + 1) * r, b * r:(b + 1) * r] = blk
    if np.abs(h - h.conj().T).max() > HERMITICITY_TOL:
        raise NonHermitianHopping("assembled one-body matrix not Hermitian")
    return h


def free_fermion_ground_energy(h: np.ndarray) -> float:
    """Sum of negative one-body levels (filling everything below zero)."""
    e = np.linalg.eigvalsh(h)
    return float(e[e < 0.0].sum())


def free_fermion_gap(h: np.ndarray) -> float:
    """Many-body gap of the free model: cheapest single occupation flip."""
    e = np.linalg.eigvalsh(h)
    return float(np.abs(e).min())


# -- time dependence -------------------------------------------------------

class TimeDependentOperator:
    """Sum of fixed matrices multiplied by scalar switching functions."""

    def __init__(self, space: FockSpace, pieces):
        # pieces: iterable of (Switching, LocalOperator-or-matrix)
        self.space = space
        self.pieces = []
        for f, op in pieces:
            m = op.matrix if isinstance(op, LocalOperator) else np.asarray(op, complex)
            self.pieces.append((f, m))

    @classmethod
    def static(cls, op: LocalOperator):
        return cls(op.space, [(Constant(1.0), op)])

    def value(self, t: float) -> LocalOperator:
        m = np.zeros((self.space.dim, self.space.dim), dtype=complex)
        for f, mat in self.pieces:
            m += f.value(t) * mat
        return LocalOperator(self.space, m)

    def derivative(self, t: float, order: int = 1) -> LocalOperator:
        m = np.zeros((self.space.dim, self.space.dim), dtype=complex)
        for f, mat in self.pieces:
            m += f.derivative(t, order) * mat
        return LocalOperator(self.space, m)

    def is_static(self) -> bool:
        return all(isinstance(f, Constant) for f, _ in self.pieces)

    def __call__(self, t):
        return self.value(t)


@dataclass
class TimeDependentHamiltonian:
    """H^eps(t) = H0(t) + eps * V(t) with analytic time derivatives."""

    h0: TimeDependentOperator
    v: TimeDependentOperator

    def at(self, t: float, eps: float) -> LocalOperator:
        h = self.h0.value(t).matrix + eps * self.v.value(t).matrix
        return LocalOperator(self.h0.space, h)

    def h0_dot(self, t: float) -> LocalOperator:
        return self.h0.derivative(t, 1)
