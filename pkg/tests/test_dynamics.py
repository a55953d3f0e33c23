import numpy as np
import pytest

from neasslab.dynamics import (
    Propagator,
    _cf4_sweep,
    heisenberg_evolve,
    propagate,
    propagate_state,
    static_evolve,
)
from neasslab.errors import StepLimitExceeded
from neasslab.fock import FockSpace, LocalOperator, random_even_operator
from neasslab.interactions import assemble_operator
from neasslab.lattice import build_chain
from neasslab.models import (
    ModelParams,
    TimeDependentOperator,
    build_example_hamiltonian,
)
from neasslab.switching import Constant, Ramp


def small_h(delta=1.7):
    lat = build_chain(3)
    sp = FockSpace(lat)
    p = ModelParams(T={(1,): [[-1.0]]},
                    phi={x: [[delta * (-1.0) ** x[0]]] for x in lat.sites},
                    mu=0.2)
    return sp, assemble_operator(build_example_hamiltonian(lat, sp, p), sp)


def exact_u(h_mat, factor):
    w, v = np.linalg.eigh(h_mat)
    return (v * np.exp(factor * w)) @ v.conj().T


def test_static_propagator_closed_form():
    sp, h = small_h()
    eta = 0.05
    prop = propagate(h, 0.0, 0.7, eta)
    expect = exact_u(h.matrix, -1j * 0.7 / eta)
    assert np.abs(prop.u - expect).max() <= 1e-8
    assert prop.unitarity_defect <= 1e-8
    # ndarray input takes the same static path
    prop2 = propagate(h.matrix, 0.0, 0.7, eta)
    assert np.allclose(prop2.u, prop.u)


def test_commuting_family_closed_form():
    # H(t) = f(t) H0 commutes with itself at all times, so
    # U = exp(-i/eta * (int f) H0) exactly
    sp, h = small_h()
    eta = 0.1
    t0, t1 = 0.2, 1.1
    h_fun = lambda s: s * h.matrix
    prop = propagate(h_fun, t0, t1, eta)
    integral = 0.5 * (t1 ** 2 - t0 ** 2)
    expect = exact_u(h.matrix, -1j * integral / eta)
    assert np.abs(prop.u - expect).max() <= 1e-6
    assert prop.unitarity_defect <= 1e-8


def test_group_law():
    sp, h = small_h()
    drive = np.diag(np.linspace(-1.0, 1.0, sp.dim))
    tdo = TimeDependentOperator(sp, [(Constant(1.0), h.matrix),
                                     (Ramp(0.0, 1.0), drive)])
    eta = 0.2
    u02 = propagate(tdo, 0.0, 0.8, eta).u
    u01 = propagate(tdo, 0.0, 0.4, eta).u
    u12 = propagate(tdo, 0.4, 0.8, eta).u
    assert np.abs(u02 - u12 @ u01).max() <= 1e-6


def test_integrator_is_fourth_order():
    rng = np.random.default_rng(1)
    d = 6
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h0 = 0.5 * (a + a.conj().T)
    b = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h1 = 0.5 * (b + b.conj().T)
    h_fun = lambda t: h0 + np.sin(2.0 * t) * h1
    ref = _cf4_sweep(h_fun, 0.0, 1.0, 1.0, 2048)
    errs, hs = [], []
    for n in (4, 8, 16, 32):
        u = _cf4_sweep(h_fun, 0.0, 1.0, 1.0, n)
        errs.append(np.log(np.abs(u - ref).max()))
        hs.append(np.log(1.0 / n))
    slope = np.polyfit(hs, errs, 1)[0]
    assert abs(slope - 4.0) < 0.3


def test_state_path_matches_matrix_path():
    sp, h = small_h()
    drive = np.diag(np.linspace(-0.5, 0.5, sp.dim))
    tdo = TimeDependentOperator(sp, [(Constant(1.0), h.matrix),
                                     (Ramp(0.0, 1.0), drive)])
    eta = 0.1
    rng = np.random.default_rng(4)
    psi0 = rng.standard_normal(sp.dim) + 1j * rng.standard_normal(sp.dim)
    psi0 /= np.linalg.norm(psi0)
    u = propagate(tdo, 0.0, 0.9, eta).u
    psi, stats = propagate_state(tdo, psi0, 0.0, 0.9, eta)
    assert np.abs(psi - u @ psi0).max() <= 1e-6
    assert stats.u is None and stats.unitarity_defect <= 1e-8


def test_trivial_and_error_paths():
    sp, h = small_h()
    prop = propagate(h, 0.3, 0.3, 0.1)
    assert prop.steps == 0 and np.allclose(prop.u, np.eye(sp.dim))
    with pytest.raises(ValueError):
        propagate(h, 0.0, 1.0, 0.0)
    drive = np.diag(np.linspace(-1.0, 1.0, sp.dim))
    tdo = TimeDependentOperator(sp, [(Constant(1.0), h.matrix),
                                     (Ramp(0.0, 1.0), drive)])
    with pytest.raises(StepLimitExceeded):
        propagate(tdo, 0.0, 1.0, 1e-3, max_steps=8)
    with pytest.raises(StepLimitExceeded):
        propagate_state(tdo, np.ones(sp.dim) / np.sqrt(sp.dim),
                        0.0, 1.0, 1e-3, max_steps=8)


def test_heisenberg_and_static_evolve_agree():
    sp, h = small_h()
    rng = np.random.default_rng(9)
    a = random_even_operator(sp, rng)
    s = 0.6
    prop = propagate(h, 0.0, s, 1.0)
    lhs = heisenberg_evolve(prop, a)
    rhs = static_evolve(h, s, a)
    assert np.abs(lhs.matrix - rhs.matrix).max() <= 1e-8
    # expectation values in any state agree with the Schroedinger picture
    psi = rng.standard_normal(sp.dim) + 1j * rng.standard_normal(sp.dim)
    psi /= np.linalg.norm(psi)
    evolved = prop.u @ psi
    assert abs(psi.conj() @ (rhs.matrix @ psi)
               - evolved.conj() @ (a.matrix @ evolved)) <= 1e-7
