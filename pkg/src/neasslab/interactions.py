"""Interactions (maps X -> local term), their norms and decay diagnostics."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import SubBoxTooLarge, SupportNotContained
from .fock import FockSpace, LocalOperator, embed_local
from .lattice import Boundary, Lattice


@dataclass
class Interaction:
    """Finite map from site subsets X to self-adjoint even terms.

    Terms are stored on the Fock space of their own support so that norms
    are cheap; `assemble` embeds them into a common space.
    """

    lattice: Lattice
    terms: dict = field(default_factory=dict)  # frozenset(sites) -> LocalOperator

    def add(self, sites, op: LocalOperator):
        key = frozenset(tuple(s) for s in sites)
        for s in key:
            if not self.lattice.contains(s):
                raise SupportNotContained(f"term support {s} outside lattice")
        if key in self.terms:
            self.terms[key] = self.terms[key] + op
        else:
            self.terms[key] = op

    def validate(self):
        """Check self-adjoint / even / number-conserving flags on all terms."""
        for key, op in self.terms.items():
            if not op.is_self_adjoint:
                raise ValueError(f"term on {sorted(key)} not self-adjoint")
            if not op.is_even:
                raise ValueError(f"term on {sorted(key)} not even")
            if not op.is_number_conserving:
                raise ValueError(f"term on {sorted(key)} not number conserving")
        return True

    def scaled(self, factor: float) -> "Interaction":
        out = Interaction(self.lattice)
        for key, op in self.terms.items():
            out.terms[key] = factor * op
        return out

    def __add__(self, other: "Interaction") -> "Interaction":
        out = Interaction(self.lattice, dict(self.terms))
        for key, op in other.terms.items():
            if key in out.terms:
                out.terms[key] = out.terms[key] + op
            else:
                out.terms[key] = op
        return out

    def __sub__(self, other: "Interaction") -> "Interaction":
        return self + other.scaled(-1.0)


def assemble_operator(phi: Interaction, space: FockSpace) -> LocalOperator:
    """Sum of all terms embedded into ``space``."""
    total = np.zeros((space.dim, space.dim), dtype=complex)
    support = set()
    for key, op in phi.terms.items():
        if not set(op.space.sites) <= set(space.sites):
            raise SupportNotContained(
                f"term support {sorted(key)} not inside target space")
        total += embed_local(op, space).matrix
        support |= set(key)
    return LocalOperator(space, total, support=tuple(support) or ())


def interaction_norm(phi, a: float, n: int) -> float:
    """Interaction norm: sup over lattices and site pairs (x, y) of
    sum_{X containing x,y} diam(X)^n e^{a d(x,y)} ||Phi(X)||.

    ``phi`` may be a single Interaction or an iterable of them (a family
    over several box sizes; the sup runs over the family).
    diam({x}) = 0 with the convention 0^0 = 1.
    """
    family = [phi] if isinstance(phi, Interaction) else list(phi)
    best = 0.0
    for inter in family:
        lat = inter.lattice
        pair_sums: dict = {}
        for key, op in inter.terms.items():
            sites = sorted(key)
            diam = lat.diameter(sites)
            w = op.norm * (diam ** n if diam > 0 else (1.0 if n == 0 else 0.0))
            if w == 0.0:
                continue
            for x, y in itertools.combinations_with_replacement(sites, 2):
                pair_sums[(x, y)] = pair_sums.get((x, y), 0.0) \
                    + w * math.exp(a * lat.metric(x, y))
        if pair_sums:
            best = max(best, max(pair_sums.values()))
    return best


def bulk_interaction_norm(phi: Interaction, a: float, n: int, m_radius: int) -> float:
    """Same norm restricted to X inside the centered sub-box Lambda_M,
    with distances and diameters taken in the plain l1 metric."""
    lat = phi.lattice
    sub = set(lat.sub_box(m_radius))
    if not sub:
        raise SubBoxTooLarge(f"sub-box radius {m_radius} empty")
    if len(sub) > lat.n_sites:
        raise SubBoxTooLarge("sub-box exceeds the lattice")
    pair_sums: dict = {}
    for key, op in phi.terms.items():
        sites = sorted(key)
        if not set(sites) <= sub:
            continue
        diam = lat.diameter(sites, use_l1=True)
        w = op.norm * (diam ** n if diam > 0 else (1.0 if n == 0 else 0.0))
        if w == 0.0:
            continue
        for x, y in itertools.combinations_with_replacement(sites, 2):
            pair_sums[(x, y)] = pair_sums.get((x, y), 0.0) \
                + w * math.exp(a * lat.l1(x, y))
    return max(pair_sums.values()) if pair_sums else 0.0


# -- Lipschitz potentials --------------------------------------------------

@dataclass
class LipschitzPotential:
    """On-site potential with its discrete slope measured in the lattice metric."""

    lattice: Lattice
    values: dict  # site -> float

    def __post_init__(self):
        self.values = {tuple(s): float(v) for s, v in self.values.items()}
        for s in self.values:
            if not self.lattice.contains(s):
                raise SupportNotContained(f"potential site {s} outside lattice")

    def lipschitz_constant(self) -> float:
        sites = list(self.values)
        best = 0.0
        for x, y in itertools.combinations(sites, 2):
            d = self.lattice.metric(x, y)
            if d > 0:
                best = max(best, abs(self.values[x] - self.values[y]) / d)
        return best

    def as_interaction(self, r: int = 1) -> Interaction:
        """V_v = sum_x v(x) a*_x a_x as single-site terms."""
        from .fock import density_op
        inter = Interaction(self.lattice)
        for s, v in self.values.items():
            if v == 0.0:
                continue
            sp = FockSpace(self.lattice, r, (s,))
            mat = sum(density_op(sp, s, i).matrix for i in range(r))
            inter.add((s,), LocalOperator(sp, v * mat, support=(s,)))
        return inter


def lipschitz_constant(v: LipschitzPotential) -> float:
    return v.lipschitz_constant()


def linear_potential(lat: Lattice, slope: float = 1.0, axis: int = 0,
                     cv_warn: float = 10.0) -> LipschitzPotential:
    """v(x) = slope * x_axis.  On a torus this is Lipschitz only for the
    open metric; a warning is emitted when C_v exceeds ``cv_warn``."""
    pot = LipschitzPotential(lat, {s: slope * s[axis] for s in lat.sites})
    if lat.boundary is Boundary.TORUS:
        cv = pot.lipschitz_constant()
        if cv > cv_warn:
            warnings.warn(
                f"linear potential on a torus: C_v = {cv:.3g} exceeds {cv_warn}; "
                "the slope is Lipschitz only for the open metric",
                stacklevel=2)
    return pot


# -- thermodynamic-limit decay diagnostic ----------------------------------

def restrict_interaction(psi: Interaction, lat: Lattice) -> Interaction:
    """Restriction of a reference interaction to a smaller lattice.

    Terms are matched by site subsets; terms with support outside are
    dropped.  Site tuples must be comparable between the two lattices
    (both centered boxes)."""
    out = Interaction(lat)
    for key, op in psi.terms.items():
        if all(lat.contains(s) for s in key):
            sp = FockSpace(lat, op.space.r, tuple(key) or (lat.sites[0],))
            out.terms[frozenset(key)] = LocalOperator(sp, op.matrix, op.support)
    return out


def tdl_diagnostic(family: dict, psi: Interaction, a: float, n: int,
                   m_list) -> list[dict]:
    """Table of ||Psi|_k - Phi^k||_{a,n,Lambda_M} over (k, M).

    ``family`` maps k -> Interaction on the box of radius k; ``psi`` is the
    reference interaction (on the largest box or an abstract parent
    lattice).  Raw decay numbers only; any rate fitting happens in the
    harness and is reported as a diagnostic, never asserted as a proof.
    """
    rows = []
    for k in sorted(family):
        phi_k = family[k]
        psi_k = restrict_interaction(psi, phi_k.lattice)
        diff = psi_k - phi_k
        for m in m_list:
            if m > max(abs(c) for s in phi_k.lattice.sites for c in s):
                continue
            rows.append({
                "k": k,
                "M": m,
                "bulk_norm": bulk_interaction_norm(diff, a, n, m),
            })
    return rows
