"""Propagators for the adiabatically scaled Schroedinger equation.

The ODE is i eta dU/dt = H(t) U.  Time is always the physical (slow) time;
the 1/eta stiffness shows up as a step count proportional to 1/eta with a
hard cap.  Steps use a fourth-order commutator-free exponential scheme
(two exponentials per step, Gauss-Legendre nodes); when H is constant on a
step the exact exponential is taken instead.  Accuracy is certified by a
step-doubling self-consistency check and a unitarity bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import StepLimitExceeded, UnitarityLost
from .fock import LocalOperator, operator_norm

UNITARITY_TOL = 1e-8
CONSISTENCY_TOL = 1e-7
MAX_STEPS = 1 << 21

_C1 = 0.5 - math.sqrt(3.0) / 6.0
_C2 = 0.5 + math.sqrt(3.0) / 6.0
_A1 = 0.25 + math.sqrt(3.0) / 6.0
_A2 = 0.25 - math.sqrt(3.0) / 6.0


@dataclass
class Propagator:
    u: np.ndarray
    t0: float
    t: float
    eta: float
    steps: int
    unitarity_defect: float


def _expm_herm(h: np.ndarray, factor: complex) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    return (v * np.exp(factor * w)) @ v.conj().T


def _cf4_sweep(h_fun, t0: float, t: float, eta: float, n_steps: int,
               static_h=None) -> np.ndarray:
    dim = static_h.shape[0] if static_h is not None else h_fun(t0).shape[0]
    if static_h is not None:
        return _expm_herm(static_h, -1j * (t - t0) / eta)
    u = np.eye(dim, dtype=complex)
    h = (t - t0) / n_steps
    for k in range(n_steps):
        a = t0 + k * h
        h1 = h_fun(a + _C1 * h)
        h2 = h_fun(a + _C2 * h)
        m1 = _A1 * h1 + _A2 * h2
        m2 = _A2 * h1 + _A1 * h2
        u = _expm_herm(m2, -1j * h / eta) @ (_expm_herm(m1, -1j * h / eta) @ u)
    return u


def propagate(h, t0: float, t: float, eta: float,
              consistency_tol: float = CONSISTENCY_TOL,
              unitarity_tol: float = UNITARITY_TOL,
              max_steps: int = MAX_STEPS,
              initial_steps: int = None,
              ref_vector: np.ndarray = None) -> Propagator:
    """Solve i eta dU/dt = H(t) U from t0 to t.

    ``h`` is a callable t -> matrix, a TimeDependentOperator, or a static
    LocalOperator/matrix.  The step count doubles until the matrix element
    <psi|U|psi> against a fixed reference vector agrees to ``consistency_tol``
    between consecutive refinements.
    """
    static_h = None
    if isinstance(h, LocalOperator):
        static_h = h.matrix
    elif isinstance(h, np.ndarray):
        static_h = h
    elif hasattr(h, "is_static") and h.is_static():
        static_h = h.value(t0).matrix
    if static_h is None:
        h_fun = (lambda s: h.value(s).matrix) if hasattr(h, "value") else h
    else:
        h_fun = None
    if eta <= 0:
        raise ValueError("eta must be positive")
    dim = static_h.shape[0] if static_h is not None else h_fun(t0).shape[0]

    if t == t0:
        return Propagator(np.eye(dim, dtype=complex), t0, t, eta, 0, 0.0)
    if static_h is not None:
        u = _cf4_sweep(None, t0, t, eta, 1, static_h)
        defect = operator_norm(u.conj().T @ u - np.eye(dim))
        return Propagator(u, t0, t, eta, 1, defect)

    if ref_vector is None:
        ref_vector = np.ones(dim) / math.sqrt(dim)
    scale = operator_norm(h_fun(0.5 * (t0 + t)))
    if initial_steps is None:
        initial_steps = max(16, int(abs(t - t0) * max(scale, 1.0) / eta / 4.0))
    n = initial_steps
    u_prev = _cf4_sweep(h_fun, t0, t, eta, n)
    val_prev = complex(ref_vector.conj() @ (u_prev @ ref_vector))
    while True:
        if 2 * n > max_steps:
            raise StepLimitExceeded(
                f"needed more than {max_steps} steps at eta={eta}")
        n *= 2
        u = _cf4_sweep(h_fun, t0, t, eta, n)
        val = complex(ref_vector.conj() @ (u @ ref_vector))
        if abs(val - val_prev) <= consistency_tol * max(abs(val), 1.0):
            break
        u_prev, val_prev = u, val
    defect = operator_norm(u.conj().T @ u - np.eye(dim))
    if defect > unitarity_tol:
        raise UnitarityLost(f"unitarity defect {defect:.3e}")
    return Propagator(u, t0, t, eta, n, defect)


def _expv_taylor(m: np.ndarray, factor: complex, psi: np.ndarray) -> np.ndarray:
    """exp(factor * M) psi by scaled Taylor matvecs (M Hermitian, moderate
    angle); splits into substeps so the series converges fast."""
    theta = abs(factor) * np.abs(m).sum(axis=1).max()
    n_sub = max(1, int(math.ceil(theta / 1.5)))
    f = factor / n_sub
    for _ in range(n_sub):
        term = psi
        out = psi.copy()
        for k in range(1, 60):
            term = (f / k) * (m @ term)
            out += term
            if np.abs(term).max() < 1e-17:
                break
        psi = out
    return psi


def _cf4_state_sweep(h_fun, psi0, t0, t, eta, n_steps) -> np.ndarray:
    psi = psi0.astype(complex).copy()
    h = (t - t0) / n_steps
    for k in range(n_steps):
        a = t0 + k * h
        h1 = h_fun(a + _C1 * h)
        h2 = h_fun(a + _C2 * h)
        psi = _expv_taylor(_A1 * h1 + _A2 * h2, -1j * h / eta, psi)
        psi = _expv_taylor(_A2 * h1 + _A1 * h2, -1j * h / eta, psi)
    return psi


def propagate_state(h, psi0: np.ndarray, t0: float, t: float, eta: float,
                    consistency_tol: float = CONSISTENCY_TOL,
                    unitarity_tol: float = UNITARITY_TOL,
                    max_steps: int = MAX_STEPS,
                    initial_steps: int = None):
    """Vector-path solution psi(t) of i eta d psi/dt = H(t) psi.

    Same integrator and step-doubling policy as ``propagate`` but applied
    to a single state, which is what expectation-value sweeps need; cost
    per step is a handful of matvecs instead of dense exponentials.
    Returns (psi, Propagator-stats with u=None).
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    h_fun = (lambda s: h.value(s).matrix) if hasattr(h, "value") else h
    if t == t0:
        return psi0.astype(complex).copy(), Propagator(None, t0, t, eta, 0, 0.0)
    scale = operator_norm(h_fun(0.5 * (t0 + t)))
    if initial_steps is None:
        initial_steps = max(16, int(abs(t - t0) * max(scale, 1.0) / eta / 4.0))
    n = initial_steps
    psi_prev = _cf4_state_sweep(h_fun, psi0, t0, t, eta, n)
    while True:
        if 2 * n > max_steps:
            raise StepLimitExceeded(
                f"needed more than {max_steps} steps at eta={eta}")
        n *= 2
        psi = _cf4_state_sweep(h_fun, psi0, t0, t, eta, n)
        if np.linalg.norm(psi - psi_prev) <= consistency_tol:
            break
        psi_prev = psi
    defect = abs(np.linalg.norm(psi) - np.linalg.norm(psi0))
    if defect > unitarity_tol:
        raise UnitarityLost(f"norm defect {defect:.3e}")
    return psi, Propagator(None, t0, t, eta, n, defect)


def heisenberg_evolve(p: Propagator, a: LocalOperator) -> LocalOperator:
    """U^dag A U."""
    return LocalOperator(a.space, p.u.conj().T @ a.matrix @ p.u)


def static_evolve(h: LocalOperator, s: float, a: LocalOperator) -> LocalOperator:
    """e^{i s H} A e^{-i s H} via exact eigendecomposition."""
    w, v = np.linalg.eigh(h.matrix)
    left = (v * np.exp(1j * s * w)) @ v.conj().T
    return LocalOperator(a.space, left @ a.matrix @ left.conj().T)
