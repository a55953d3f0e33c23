"""Construction of the dressing generator, the dressed state, and Kubo response.

The transformed Hamiltonian of the slow frame, expanded in the perturbation
strength eps with the adiabatic ratio mu = eta/eps absorbed into the
coefficients, is

    Q = eta I(H0-dot)
        + o eta int_0^1 e^{-i o lam eps S} S-dot e^{+i o lam eps S} dlam * eps
        + e^{-i o eps S} (H0 + eps V) e^{+i o eps S},

where o = +-1 is the global orientation of the dressing and S = sum_j
eps^{j-1} A_j.  Writing coeff_j(Q) = i o L(A_j) + R_j with A_j unknown, the
choice A_j = I(R_j) cancels the j-th order inside ground-state commutator
expectations exactly (the defining identity of the inverse Liouvillian),
which is certified numerically order by order on a random observable panel.

The orientation is not taken from any convention: it is pinned by running
the order-1 construction under both signs on a randomized gapped fixture
and keeping the one whose residual vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ResidualTooLarge, SignConventionUndetermined
from .fock import FockSpace, LocalOperator, random_even_operator
from .liouvillian import LiouvillianContext, quasi_local_inverse
from .models import TimeDependentOperator
from .series import (
    OperatorPolynomial,
    adjoint_series,
    integrated_adjoint_series,
)
from .spectral import GroundState, diagonalize, ground_state

DEFAULT_STENCIL = 1e-4
RESIDUAL_RTOL = 1e-7
RESIDUAL_FLOOR = 1e-12
PANEL_SIZE = 20
PANEL_SEED = 20240913


@dataclass
class NeassGenerator:
    """Per-order generator data A_1..A_n at one time, with certificates."""

    order: int
    mu: float
    time: float
    a_list: list  # matrices A_1..A_n
    residuals: list
    scales: list
    orientation: int
    space: FockSpace = None

    def s_matrix(self, eps: float) -> np.ndarray:
        """S = sum_j eps^{j-1} A_j at numeric eps."""
        s = np.zeros_like(self.a_list[0])
        for j, a in enumerate(self.a_list, start=1):
            s = s + eps ** (j - 1) * a
        return s

    def eps_s_poly(self, degree: int) -> OperatorPolynomial:
        """eps*S as a polynomial (A_j at degree j)."""
        p = OperatorPolynomial(degree, dim=self.a_list[0].shape[0])
        for j, a in enumerate(self.a_list, start=1):
            if j <= degree:
                p.coeffs[j] = np.asarray(a, complex)
        return p


def _panel(space: FockSpace, seed: int = PANEL_SEED, size: int = PANEL_SIZE):
    """Fixed panel of random even observables, norm-normalized."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(size):
        c = random_even_operator(space, rng, self_adjoint=True)
        out.append(c.matrix / c.norm)
    return out


def _commutator_residual(rho0: GroundState, x: np.ndarray, panel) -> float:
    best = 0.0
    for c in panel:
        val = rho0.vector.conj() @ ((x @ c - c @ x) @ rho0.vector)
        best = max(best, abs(complex(val)))
    return best


def _all_flat(tdo: TimeDependentOperator, t: float, max_order: int) -> bool:
    """True when every switching derivative up to max_order vanishes at t."""
    return all(f.derivative(t, m) == 0.0
               for f, _ in tdo.pieces for m in range(1, max_order + 1))


def _q_polynomial(h0_mat, v_mat, ih0dot, s_poly, s_dot_poly, mu, o, degree):
    """The transformed-Hamiltonian polynomial at one time.

    ``s_poly``/``s_dot_poly`` are eps*S and eps*S-dot; ``ih0dot`` is the
    inverse Liouvillian applied to H0-dot (only its product with mu enters).
    """
    dim = h0_mat.shape[0]
    o_sp = float(o) * s_poly
    q = adjoint_series(o_sp, h0_mat, degree)
    q = q + adjoint_series(o_sp, v_mat, degree).shift(1)
    if mu != 0.0:
        term1 = OperatorPolynomial(degree, dim=dim)
        if degree >= 1:
            term1.coeffs[1] = mu * ih0dot
        q = q + term1
        if not s_dot_poly.is_zero():
            q = q + (o * mu) * integrated_adjoint_series(
                o_sp, s_dot_poly, degree).shift(1)
    return q


def build_generators(h0: TimeDependentOperator, v: TimeDependentOperator,
                     s_time: float, mu: float, n: int,
                     orientation: int = None, dt: float = DEFAULT_STENCIL,
                     panel_seed: int = PANEL_SEED,
                     residual_rtol: float = RESIDUAL_RTOL,
                     gap_floor: float = 1e-6,
                     _certify: bool = True) -> NeassGenerator:
    """Iteratively construct A_1..A_n at time ``s_time``.

    For each order j the polynomial Q is formed with A_j = 0, the eps^j
    coefficient is extracted as the remainder R_j, and A_j = I(R_j) cancels
    it.  Time derivatives of lower-order generators enter through mu and are
    obtained by central differences of the order-(j-1) construction at
    s +- dt; switching functions that are flat at ``s_time`` short-circuit
    to exact zeros so stationary Hamiltonians give the mu-independent
    generator matrix-identically.

    The certificate re-evaluates the eps^j coefficient with A_j inserted
    against a fixed panel of random even observables and aborts with
    ResidualTooLarge on failure.
    """
    if orientation is None:
        orientation = pinned_orientation()
    space = h0.space
    dim = space.dim
    panel = _panel(space, panel_seed) if _certify else None
    cache = {}

    def a_lists(t, order):
        key = (round(t, 12), order)
        if key in cache:
            return cache[key]
        spec = diagonalize(h0.value(t))
        ctx = LiouvillianContext(spec, tolerance=gap_floor)
        rho0 = ground_state(spec)
        v_mat = v.value(t).matrix
        flat = mu == 0.0 or (_all_flat(h0, t, order + 1) and _all_flat(v, t, order + 1))
        ih0dot = (np.zeros((dim, dim), complex) if flat
                  else quasi_local_inverse(ctx, h0.derivative(t, 1).matrix))
        a_list, residuals, scales = [], [], []
        for j in range(1, order + 1):
            if flat or j == 1:
                a_dots = [np.zeros((dim, dim), complex)] * len(a_list)
            else:
                plus = a_lists(t + dt, j - 1)[0]
                minus = a_lists(t - dt, j - 1)[0]
                a_dots = [(p - m) / (2.0 * dt) for p, m in zip(plus, minus)]
            s_poly = OperatorPolynomial(j, dim=dim)
            s_dot_poly = OperatorPolynomial(j, dim=dim)
            for i, a in enumerate(a_list, start=1):
                s_poly.coeffs[i] = a
                s_dot_poly.coeffs[i] = a_dots[i - 1]
            q = _q_polynomial(h0.value(t).matrix, v_mat, ih0dot,
                              s_poly, s_dot_poly, mu, orientation, j)
            r_j = q.coeff(j)
            scale = np.linalg.norm(r_j, 2)
            a_j = quasi_local_inverse(ctx, 0.5 * (r_j + r_j.conj().T))
            a_list.append(a_j)
            if _certify and t == s_time and order == n:
                s_full = OperatorPolynomial(j, dim=dim)
                for i, a in enumerate(a_list, start=1):
                    s_full.coeffs[i] = a
                q_full = _q_polynomial(h0.value(t).matrix, v_mat, ih0dot,
                                       s_full, s_dot_poly, mu, orientation, j)
                res = _commutator_residual(rho0, q_full.coeff(j), panel)
                residuals.append(res)
                scales.append(scale)
                tol = residual_rtol * max(scale, RESIDUAL_FLOOR)
                if res > tol:
                    raise ResidualTooLarge(j, res, tol)
        out = (a_list, residuals, scales)
        cache[key] = out
        return out

    a_list, residuals, scales = a_lists(s_time, n)
    return NeassGenerator(order=n, mu=mu, time=s_time, a_list=a_list,
                          residuals=residuals, scales=scales,
                          orientation=orientation, space=space)


# -- orientation pinning ---------------------------------------------------

_PINNED = {}


def pin_orientation(h0: TimeDependentOperator, v: TimeDependentOperator,
                    s_time: float, mu: float,
                    residual_rtol: float = RESIDUAL_RTOL) -> int:
    """Run the order-1 construction under both orientations; keep the one
    whose residual certificate passes.  Raises when both or neither pass."""
    passing = []
    results = {}
    for o in (+1, -1):
        try:
            gen = build_generators(h0, v, s_time, mu, 1, orientation=o,
                                   residual_rtol=residual_rtol)
            passing.append(o)
            results[o] = gen.residuals[0]
        except ResidualTooLarge as e:
            results[o] = e.residual
    if len(passing) != 1:
        raise SignConventionUndetermined(
            f"orientation pinning inconclusive: residuals {results}")
    return passing[0]


def _pinning_fixture():
    """Randomized gapped 3-site fixture used for global orientation pinning."""
    from .lattice import build_chain
    from .models import ModelParams, build_example_hamiltonian
    from .interactions import assemble_operator
    from .switching import Bump, Constant, Ramp

    lat = build_chain(3, "open")
    space = FockSpace(lat)
    rng = np.random.default_rng(7)
    p = ModelParams(r=1, T={(1,): [[-1.0]]},
                    phi={x: [[2.5 * (-1) ** x[0]]] for x in lat.sites},
                    mu=0.0)
    h0_op = assemble_operator(build_example_hamiltonian(lat, space, p), space)
    drive = random_even_operator(space, rng, self_adjoint=True)
    pert = random_even_operator(space, rng, self_adjoint=True)
    h0 = TimeDependentOperator(space, [
        (Constant(1.0), h0_op),
        (Ramp(0.0, 1.0), 0.15 * drive.matrix),
    ])
    v = TimeDependentOperator(space, [(Bump(0.0, 1.0), pert.matrix)])
    return h0, v


def pinned_orientation() -> int:
    """Globally pinned orientation, determined once per process."""
    if "o" not in _PINNED:
        h0, v = _pinning_fixture()
        _PINNED["o"] = pin_orientation(h0, v, 0.4, 0.7)
    return _PINNED["o"]


# -- resummation, dressing, expectations -----------------------------------

def default_delta_schedule(j_max: int) -> list[float]:
    return [2.0 ** (-j) for j in range(1, j_max + 1)]


def resum_generator(gen: NeassGenerator, eps: float, eta: float,
                    delta=None) -> tuple[np.ndarray, int]:
    """Resummed S: keep order j only while eps <= delta_j and eta <= delta_j.

    Returns (S matrix, J = highest retained order).
    """
    if delta is None:
        delta = default_delta_schedule(gen.order)
    if any(b >= a for a, b in zip(delta, delta[1:])):
        raise ValueError("delta schedule must be strictly decreasing")
    s = np.zeros_like(gen.a_list[0])
    j_kept = 0
    for j, a in enumerate(gen.a_list, start=1):
        if j <= len(delta) and eps <= delta[j - 1] and eta <= delta[j - 1]:
            s = s + eps ** (j - 1) * a
            j_kept = j
        else:
            break
    return s, j_kept


def apply_dressing(gen, a: LocalOperator, eps: float,
                   s_matrix=None) -> LocalOperator:
    """beta[A] = e^{-i o eps S} A e^{+i o eps S} by exact exponentiation."""
    if s_matrix is None:
        s_matrix = gen.s_matrix(eps)
    o = gen.orientation if hasattr(gen, "orientation") else +1
    w, u = np.linalg.eigh(0.5 * (s_matrix + s_matrix.conj().T))
    phase = np.exp(1j * o * eps * w)
    right = (u * phase) @ u.conj().T          # e^{+i o eps S}
    return LocalOperator(a.space, right.conj().T @ a.matrix @ right)


def neass_expectation(rho0: GroundState, gen: NeassGenerator,
                      a: LocalOperator, eps: float, s_matrix=None) -> complex:
    """Pi(A) = rho0(beta[A])."""
    return rho0(apply_dressing(gen, a, eps, s_matrix=s_matrix))


def kubo_coefficient(ctx: LiouvillianContext, rho0: GroundState,
                     v: LocalOperator, a: LocalOperator,
                     orientation: int = None) -> float:
    """Linear-response coefficient d/deps|_0 Pi^{eps,0}(A).

    From the order-1, mu = 0 generator A_1 = I(V):
        sigma_A = -i o rho0([I(V), A]).
    """
    if orientation is None:
        orientation = pinned_orientation()
    iv = quasi_local_inverse(ctx, v.matrix)
    comm = iv @ a.matrix - a.matrix @ iv
    val = rho0.vector.conj() @ (comm @ rho0.vector)
    return float((-1j * orientation * complex(val)).real)


# -- text serialization ----------------------------------------------------

def save_generator(gen: NeassGenerator, path):
    """Dump a generator to a plain-text container (cross-checkable)."""
    with open(path, "w") as f:
        f.write("neasslab-generator 1\n")
        f.write(f"order {gen.order}\n")
        f.write(f"mu {gen.mu!r}\n")
        f.write(f"time {gen.time!r}\n")
        f.write(f"orientation {gen.orientation}\n")
        f.write(f"dim {gen.a_list[0].shape[0]}\n")
        f.write("residuals " + " ".join(repr(float(r)) for r in gen.residuals) + "\n")
        f.write("scales " + " ".join(repr(float(r)) for r in gen.scales) + "\n")
        for j, a in enumerate(gen.a_list, start=1):
            f.write(f"matrix A{j}\n")
            for row in a:
                f.write(" ".join(f"{float(z.real)!r},{float(z.imag)!r}"
                                 for z in row) + "\n")


def load_generator(path) -> NeassGenerator:
    with open(path) as f:
        magic = f.readline().split()
        if magic[:1] != ["neasslab-generator"]:
            raise ValueError("not a generator dump")
        meta = {}
        for _ in range(7):
            key, *rest = f.readline().split()
            meta[key] = rest
        order = int(meta["order"][0])
        dim = int(meta["dim"][0])
        a_list = []
        for _ in range(order):
            f.readline()  # matrix header
            rows = []
            for _ in range(dim):
                rows.append([complex(float(p.split(",")[0]), float(p.split(",")[1]))
                             for p in f.readline().split()])
            a_list.append(np.array(rows))
    return NeassGenerator(
        order=order, mu=float(meta["mu"][0]), time=float(meta["time"][0]),
        a_list=a_list,
        residuals=[float(x) for x in meta["residuals"]],
        scales=[float(x) for x in meta["scales"]],
        orientation=int(meta["orientation"][0]))
