import math

import numpy as np
import pytest

from neasslab.errors import SupportNotContained
from neasslab.fock import FockSpace, LocalOperator, density_op
from neasslab.interactions import (
    Interaction,
    LipschitzPotential,
    assemble_operator,
    bulk_interaction_norm,
    interaction_norm,
    linear_potential,
    lipschitz_constant,
    restrict_interaction,
    tdl_diagnostic,
)
from neasslab.lattice import build_chain, build_lattice


def onsite_term(lat, site, value):
    sp = FockSpace(lat, sites=(site,))
    return LocalOperator(sp, value * density_op(sp, site).matrix, support=(site,))


def pair_term(lat, x, y, value):
    sp = FockSpace(lat, sites=(x, y))
    m = value * (density_op(sp, x).matrix @ density_op(sp, y).matrix)
    return LocalOperator(sp, m, support=(x, y))


def test_empty_interaction_assembles_to_zero():
    lat = build_chain(3)
    sp = FockSpace(lat)
    op = assemble_operator(Interaction(lat), sp)
    assert np.abs(op.matrix).max() == 0.0


def test_assemble_linearity_and_disjoint_spectrum():
    lat = build_chain(2)
    sp = FockSpace(lat)
    phi = Interaction(lat)
    phi.add(((0,),), onsite_term(lat, (0,), 1.0))
    psi = Interaction(lat)
    psi.add(((1,),), onsite_term(lat, (1,), 2.0))
    both = assemble_operator(phi + psi, sp)
    sep = assemble_operator(phi, sp).matrix + assemble_operator(psi, sp).matrix
    assert np.allclose(both.matrix, sep)
    # disjoint single-site terms: spectrum is the Minkowski sum {0,1}+{0,2}
    w = np.linalg.eigvalsh(both.matrix)
    assert np.allclose(sorted(w), [0.0, 1.0, 2.0, 3.0])


def test_validate_flags():
    lat = build_chain(2)
    sp = FockSpace(lat, sites=((0,),))
    bad = Interaction(lat)
    bad.add(((0,),), LocalOperator(sp, np.array([[0, 1], [0, 0]], complex),
                                   support=((0,),)))
    with pytest.raises(ValueError):
        bad.validate()


def test_norm_single_onsite_term():
    lat = build_chain(3)
    phi = Interaction(lat)
    phi.add(((1,),), onsite_term(lat, (1,), 0.7))
    # diam({x}) = 0 with 0^0 = 1: the n = 0 norm is just the term norm
    assert abs(interaction_norm(phi, 1.0, 0) - 0.7) < 1e-12
    # for n >= 1 the singleton contributes 0
    assert interaction_norm(phi, 1.0, 1) == 0.0


def test_norm_nearest_neighbor():
    lat = build_chain(4)
    phi = Interaction(lat)
    phi.add(((1,), (2,)), pair_term(lat, (1,), (2,), 1.0))
    c = pair_term(lat, (1,), (2,), 1.0).norm
    assert abs(interaction_norm(phi, 0.7, 0) - c * math.exp(0.7)) < 1e-12
    # a = 0, n = 0 reduces to the max over pairs of summed term norms
    assert abs(interaction_norm(phi, 0.0, 0) - c) < 1e-12


def test_norm_monotonicity_and_axioms():
    lat = build_chain(5)
    rng = np.random.default_rng(2)
    phi = Interaction(lat)
    psi = Interaction(lat)
    for x in range(4):
        phi.add(((x,), (x + 1,)), pair_term(lat, (x,), (x + 1,), rng.uniform(-1, 1)))
        psi.add(((x,), (x + 1,)), pair_term(lat, (x,), (x + 1,), rng.uniform(-1, 1)))
    n_phi = interaction_norm(phi, 0.5, 0)
    assert interaction_norm(phi, 1.0, 0) >= n_phi
    assert interaction_norm(phi, 0.5, 1) >= n_phi - 1e-12  # diam >= 1 terms
    # homogeneity and triangle inequality
    assert abs(interaction_norm(phi.scaled(-2.0), 0.5, 0) - 2 * n_phi) < 1e-12
    assert interaction_norm(phi + psi, 0.5, 0) <= \
        n_phi + interaction_norm(psi, 0.5, 0) + 1e-12


def test_bulk_norm():
    lat = build_lattice(1, 3, "torus")
    phi = Interaction(lat)
    phi.add(((2,), (3,)), pair_term(lat, (2,), (3,), 1.0))
    c = pair_term(lat, (2,), (3,), 1.0).norm
    # supported outside the M = 1 sub-box
    assert bulk_interaction_norm(phi, 1.0, 0, 1) == 0.0
    # inside M = 3 it contributes with the l1 distance
    assert abs(bulk_interaction_norm(phi, 1.0, 0, 3) - c * math.exp(1.0)) < 1e-12
    # wrap terms never enter the bulk norm of a smaller sub-box
    wrap = Interaction(lat)
    wrap.add(((-3,), (3,)), pair_term(lat, (-3,), (3,), 1.0))
    assert bulk_interaction_norm(wrap, 1.0, 0, 2) == 0.0


def test_bulk_norm_below_full_norm_open_lattice():
    lat = build_chain(5)  # sites 0..4, open: metric = l1
    phi = Interaction(lat)
    for x in range(4):
        phi.add(((x,), (x + 1,)), pair_term(lat, (x,), (x + 1,), 0.5))
    full = interaction_norm(phi, 0.5, 1)
    assert bulk_interaction_norm(phi, 0.5, 1, 2) <= full + 1e-12


def test_lipschitz_constants():
    lat = build_chain(4)
    const = LipschitzPotential(lat, {s: 3.0 for s in lat.sites})
    assert lipschitz_constant(const) == 0.0
    lin = LipschitzPotential(lat, {s: float(s[0]) for s in lat.sites})
    assert lipschitz_constant(lin) == 1.0


def test_lipschitz_linear_on_torus():
    lat = build_lattice(1, 2, "torus")
    with pytest.warns(UserWarning):
        pot = linear_potential(lat, slope=1.0, cv_warn=2.0)
    # sites -2 and 2 sit at wrapped distance 1 but differ by 4
    assert pot.lipschitz_constant() == 4.0


def test_potential_site_check():
    lat = build_chain(3)
    with pytest.raises(SupportNotContained):
        LipschitzPotential(lat, {(9,): 1.0})


def test_potential_as_interaction():
    lat = build_chain(3)
    sp = FockSpace(lat)
    pot = LipschitzPotential(lat, {s: float(s[0]) for s in lat.sites})
    op = assemble_operator(pot.as_interaction(), sp)
    direct = sum(float(s[0]) * density_op(sp, s).matrix for s in lat.sites)
    assert np.allclose(op.matrix, direct)


def test_tdl_diagnostic_restriction_is_zero():
    ref_lat = build_lattice(1, 3, "open")
    ref = Interaction(ref_lat)
    for x in range(-3, 3):
        ref.add(((x,), (x + 1,)), pair_term(ref_lat, (x,), (x + 1,), 1.0))
    family = {}
    for k in (1, 2, 3):
        lat = build_lattice(1, k, "open")
        family[k] = restrict_interaction(ref, lat)
    rows = tdl_diagnostic(family, ref, 0.5, 0, [1, 2, 3])
    assert rows and all(r["bulk_norm"] == 0.0 for r in rows)


def test_tdl_diagnostic_boundary_defect_decays():
    # boundary-modified on-site term of size e^{-k} shows up at M >= k
    ref_lat = build_lattice(1, 3, "open")
    ref = Interaction(ref_lat)
    family = {}
    for k in (1, 2, 3):
        lat = build_lattice(1, k, "open")
        phi = Interaction(lat)
        phi.add(((k,),), onsite_term(lat, (k,), math.exp(-k)))
        family[k] = phi
    rows = tdl_diagnostic(family, ref, 0.0, 0, [1, 2, 3])
    by_k = {}
    for r in rows:
        if r["M"] >= r["k"]:
            by_k.setdefault(r["k"], max(by_k.get(r["k"], 0.0), r["bulk_norm"]))
    assert by_k[1] > by_k[2] > by_k[3] > 0.0
    assert abs(by_k[2] - math.exp(-2)) < 1e-12
