"""The experiments: defect sweeps, slope fits, lifetime, TDL convergence,
model checks, and norm tables.

Each experiment takes a parsed config plus a seed and returns (rows, report)
where ``report`` carries fitted slopes and pass/fail verdicts against the
exponent targets declared in the config.  The verdicts quantify the
adiabatic-theorem exponents at desk scale; they are least-squares fits, not
proofs.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..dynamics import (
    heisenberg_evolve,
    propagate,
    propagate_state,
    static_evolve,
)
from ..errors import (
    DegenerateGroundState,
    DynamicRangeTooSmall,
    FloorContamination,
    NeassLabError,
)
from ..fock import LocalOperator
from ..interactions import (
    LipschitzPotential,
    bulk_interaction_norm,
    interaction_norm,
)
from ..liouvillian import LiouvillianContext, quasi_local_inverse
from ..models import one_body_matrix, free_fermion_gap, free_fermion_ground_energy
from ..neass import (
    apply_dressing,
    build_generators,
    neass_expectation,
    pinned_orientation,
    resum_generator,
)
from ..spectral import diagonalize, ground_state, uniform_gap_scan
from .config import (
    build_observables,
    build_setup,
    cfg_floats,
    cfg_get,
    potential_values,
)

DEFECT_FLOOR = 1e-13


def _dressed_vector(s_matrix, orientation, eps, ground_vec):
    """e^{+i o eps S} |ground> — the state whose expectations realize the
    dressed functional rho0(e^{-i o eps S} A e^{+i o eps S})."""
    w, u = np.linalg.eigh(0.5 * (s_matrix + s_matrix.conj().T))
    phase = np.exp(1j * orientation * eps * w)
    return (u * phase) @ (u.conj().T @ ground_vec)


def _parallel_map(fn, items, threads):
    """Order-preserving parallel map; results independent of thread count."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def fit_loglog_slope(xs, ys, floor: float = DEFECT_FLOOR):
    """OLS fit of log y vs log x.

    Points at or below the noise floor are excluded (their count is
    reported); requires >= 4 surviving points spanning >= 1 decade.
    Returns (slope, intercept, rms residual, n_excluded).
    """
    pairs = [(x, y) for x, y in zip(xs, ys) if y > floor]
    n_excluded = len(xs) - len(pairs)
    if n_excluded and not pairs:
        raise FloorContamination("all points at the numerical noise floor")
    if len(pairs) < 4:
        raise DynamicRangeTooSmall(
            f"only {len(pairs)} usable points (need >= 4)")
    lx = np.log10([p[0] for p in pairs])
    ly = np.log10([p[1] for p in pairs])
    if lx.max() - lx.min() < 1.0 - 1e-9:
        raise DynamicRangeTooSmall(
            f"x spans {lx.max() - lx.min():.2f} decades (need >= 1)")
    a = np.vstack([lx, np.ones_like(lx)]).T
    coef, res, _, _ = np.linalg.lstsq(a, ly, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    rms = float(np.sqrt(np.mean((a @ coef - ly) ** 2)))
    return slope, intercept, rms, n_excluded


# -- adiabatic defect sweep ------------------------------------------------

def run_defect_sweep(cp, seed: int = 0, threads: int = 1):
    """Measure |Pi(t0)(U^dag A U) - Pi(t)(A)| over an (eps, eta) grid and fit
    the log-log slope along the swept axis."""
    setup = build_setup(cp)
    sec = "experiment"
    n = cfg_get(cp, sec, "n", int, 1)
    t0 = cfg_get(cp, sec, "t0", float, -0.2)
    t1 = cfg_get(cp, sec, "t", float, 1.2)
    eps_grid = cfg_floats(cp, sec, "eps_grid")
    eta_grid = cfg_floats(cp, sec, "eta_grid")
    prop_tol = cfg_get(cp, sec, "propagator_tol", float, 1e-9)
    if (eps_grid is None) == (eta_grid is None):
        from ..errors import ConfigError
        raise ConfigError("[experiment] give exactly one of eps_grid / eta_grid")
    if eps_grid is not None:
        eta = cfg_get(cp, sec, "eta", float, required=True)
        grid = [(e, eta) for e in eps_grid]
        axis = "eps"
    else:
        eps = cfg_get(cp, sec, "eps", float, required=True)
        grid = [(eps, h) for h in eta_grid]
        axis = "eta"
    observables = build_observables(cp, setup.space, seed)
    convention = pinned_orientation()

    spec0 = diagonalize(setup.h0.value(t0))
    spec1 = diagonalize(setup.h0.value(t1))
    rho0, rho1 = ground_state(spec0), ground_state(spec1)

    def point(pair):
        eps, eta = pair
        mu = eta / eps
        out = []
        try:
            gen0 = build_generators(setup.h0, setup.v, t0, mu, n)
            gen1 = build_generators(setup.h0, setup.v, t1, mu, n)
            s0, j0 = resum_generator(gen0, eps, eta)
            s1, j1 = resum_generator(gen1, eps, eta)
            ham = lambda s: setup.h0.value(s).matrix + eps * setup.v.value(s).matrix
            # Pi(t0)(U^dag A U) = <U chi0| A |U chi0> with chi0 the dressed
            # ground state at t0: only a vector needs propagating.
            chi0 = _dressed_vector(s0, gen0.orientation, eps, rho0.vector)
            chi1 = _dressed_vector(s1, gen1.orientation, eps, rho1.vector)
            psi, stats = propagate_state(ham, chi0, t0, t1, eta,
                                         consistency_tol=prop_tol)
        except NeassLabError as e:
            return [{"k": setup.meta["k"], "n": n, "eps": eps, "eta": eta,
                     "t0": t0, "t": t1, "observable": name,
                     "support": len(op.support), "defect": float("nan"),
                     "error": type(e).__name__, "seed": seed,
                     "convention": convention, "steps": 0,
                     "unitarity_defect": float("nan"), "resum_J": 0}
                    for name, op in observables]
        for name, op in observables:
            val0 = complex(psi.conj() @ (op.matrix @ psi))
            val1 = complex(chi1.conj() @ (op.matrix @ chi1))
            out.append({"k": setup.meta["k"], "n": n, "eps": eps, "eta": eta,
                        "t0": t0, "t": t1, "observable": name,
                        "support": len(op.support),
                        "defect": abs(val0 - val1), "error": "",
                        "seed": seed, "convention": convention,
                        "steps": stats.steps,
                        "unitarity_defect": stats.unitarity_defect,
                        "resum_J": min(j0, j1)})
        return out

    rows = [r for chunk in _parallel_map(point, grid, threads) for r in chunk]

    report = {"axis": axis, "n": n, "fits": {}}
    target = cfg_get(cp, sec, "expected_slope", float, None)
    tol = cfg_get(cp, sec, "slope_tolerance", float, 0.3)
    all_ok = True
    for name, _ in observables:
        sel = [r for r in rows if r["observable"] == name and not r["error"]]
        xs = [r[axis] for r in sel]
        ys = [r["defect"] for r in sel]
        try:
            slope, intercept, rms, nexc = fit_loglog_slope(xs, ys)
            entry = {"slope": slope, "intercept": intercept,
                     "residual": rms, "excluded": nexc}
            if target is not None:
                entry["pass"] = abs(slope - target) <= tol
                all_ok &= entry["pass"]
        except NeassLabError as e:
            entry = {"error": f"{type(e).__name__}: {e}"}
            all_ok = False
        report["fits"][name] = entry
    report["pass"] = all_ok if target is not None else None
    return rows, report


# -- lifetime of the dressed state under static dynamics -------------------

def lifetime_experiment(cp, seed: int = 0, threads: int = 1):
    """Static H^eps = H0 + eps V: drift(eps, s) = |Pi(e^{isL}[A]) - Pi(A)|."""
    setup = build_setup(cp)
    sec = "experiment"
    n = cfg_get(cp, sec, "n", int, 2)
    t_build = cfg_get(cp, sec, "t_build", float, 0.0)
    eps_grid = cfg_floats(cp, sec, "eps_grid", required=True)
    s_grid = cfg_floats(cp, sec, "s_grid", [1.0, 2.0, 5.0])
    observables = build_observables(cp, setup.space, seed)
    convention = pinned_orientation()

    spec = diagonalize(setup.h0.value(t_build))
    rho0 = ground_state(spec)
    v_static = setup.v.value(t_build)

    def point(eps):
        gen = build_generators(setup.h0, setup.v, t_build, 0.0, n)
        h_eps = LocalOperator(setup.space,
                              setup.h0.value(t_build).matrix + eps * v_static.matrix)
        out = []
        for name, op in observables:
            base = neass_expectation(rho0, gen, op, eps)
            for s in s_grid:
                moved = static_evolve(h_eps, s, op)
                val = neass_expectation(rho0, gen, moved, eps)
                out.append({"n": n, "eps": eps, "s": s, "observable": name,
                            "drift": abs(val - base), "seed": seed,
                            "convention": convention})
        return out

    rows = [r for chunk in _parallel_map(point, eps_grid, threads) for r in chunk]

    min_slope = cfg_get(cp, sec, "min_slope", float, n + 1 - 0.3)
    report = {"n": n, "fits": {}, "pass": True}
    s_fit = cfg_get(cp, sec, "fit_s", float, s_grid[-1])
    for name, _ in observables:
        sel = [r for r in rows if r["observable"] == name and r["s"] == s_fit]
        try:
            slope, intercept, rms, nexc = fit_loglog_slope(
                [r["eps"] for r in sel], [r["drift"] for r in sel])
            ok = slope >= min_slope
            report["fits"][name] = {"slope": slope, "intercept": intercept,
                                    "residual": rms, "excluded": nexc,
                                    "pass": ok}
            report["pass"] &= ok
        except NeassLabError as e:
            report["fits"][name] = {"error": f"{type(e).__name__}: {e}"}
            report["pass"] = False
    return rows, report


# -- thermodynamic-limit convergence ---------------------------------------

def tdl_convergence_experiment(cp, seed: int = 0, threads: int = 1):
    """Ground-state / dressed / evolved expectations of a fixed central
    observable across box sizes, differenced against the largest box."""
    sec = "experiment"
    k_list = [int(x) for x in cfg_get(cp, sec, "k_list", str, "2 3").split()]
    n = cfg_get(cp, sec, "n", int, 1)
    eps = cfg_get(cp, sec, "eps", float, 0.02)
    eta = cfg_get(cp, sec, "eta", float, 0.1)
    t0 = cfg_get(cp, sec, "t0", float, -0.2)
    t1 = cfg_get(cp, sec, "t", float, 1.2)
    prop_tol = cfg_get(cp, sec, "propagator_tol", float, 1e-9)

    def at_k(k):
        setup = build_setup(cp, k_override=k)
        observables = build_observables(cp, setup.space, seed)
        spec1 = diagonalize(setup.h0.value(t1))
        rho1 = ground_state(spec1)
        mu = eta / eps
        gen1 = build_generators(setup.h0, setup.v, t1, mu, n)
        ham = lambda s: setup.h0.value(s).matrix + eps * setup.v.value(s).matrix
        spec0 = diagonalize(setup.h0.value(t0))
        rho0 = ground_state(spec0)
        gen0 = build_generators(setup.h0, setup.v, t0, mu, n)
        chi0 = _dressed_vector(gen0.s_matrix(eps), gen0.orientation, eps,
                               rho0.vector)
        psi, _ = propagate_state(ham, chi0, t0, t1, eta,
                                 consistency_tol=prop_tol)
        vals = {}
        for name, op in observables:
            vals[name] = {
                "ground": float(np.real(rho1(op))),
                "neass": float(np.real(neass_expectation(rho1, gen1, op, eps))),
                "evolved": float(np.real(psi.conj() @ (op.matrix @ psi))),
            }
        return k, vals

    results = dict(_parallel_map(at_k, k_list, threads))
    k_max = max(k_list)
    rows = []
    for k in sorted(k_list):
        for name, vals in sorted(results[k].items()):
            for kind in ("ground", "neass", "evolved"):
                rows.append({
                    "k": k, "observable": name, "kind": kind,
                    "value": vals[kind],
                    "diff_to_kmax": abs(vals[kind] - results[k_max][name][kind]),
                    "seed": seed,
                })
    report = {"k_max": k_max, "monotone": {}}
    for name in results[k_max]:
        for kind in ("ground", "neass", "evolved"):
            seq = [abs(results[k][name][kind] - results[k_max][name][kind])
                   for k in sorted(k_list) if k != k_max]
            report["monotone"][f"{name}/{kind}"] = all(
                a >= b - 1e-12 for a, b in zip(seq, seq[1:]))
    return rows, report


# -- model check and norms -------------------------------------------------

def model_check(cp, seed: int = 0):
    """Validate the model: flags, norms, gap scan, Lipschitz constant,
    free-fermion cross-check when W = 0."""
    setup = build_setup(cp)
    sec = "experiment"
    setup.h0_interaction.validate()
    rows = []
    g_required = cfg_get(cp, sec, "g_required", float, None)
    k_list = [int(x) for x in cfg_get(
        cp, sec, "k_list", str, str(setup.meta["k"] or setup.meta["n_sites"])).split()]
    t_grid = cfg_floats(cp, sec, "t_grid", [0.0])

    def build_h(k, t):
        try:
            s = build_setup(cp, k_override=k)
        except NeassLabError:
            raise
        return s.h0.value(t)

    scan = uniform_gap_scan(build_h, k_list, t_grid, g_required=g_required)
    gap_ok = all(not r["degenerate"] and r.get("gap_ok", True) for r in scan)
    for r in scan:
        r["check"] = "gap"
        rows.append(r)

    for a, m in ((0.5, 0), (0.5, 1), (1.0, 0), (1.0, 1)):
        rows.append({"check": "norm", "a": a, "n": m,
                     "value": interaction_norm(setup.h0_interaction, a, m)})

    if cp.has_section("perturbation"):
        pot = LipschitzPotential(setup.lattice, potential_values(cp, setup.lattice))
        rows.append({"check": "lipschitz", "value": pot.lipschitz_constant()})

    ff_ok = True
    if not setup.params.W:
        h1 = one_body_matrix(setup.lattice, setup.params)
        oracle_e = free_fermion_ground_energy(h1)
        oracle_gap = free_fermion_gap(h1)
        w = np.linalg.eigvalsh(setup.h0.value(0.0).matrix) \
            if setup.h0.is_static() else None
        if w is not None:
            scale = max(abs(oracle_e), 1.0)
            ff_ok = bool(abs(w[0] - oracle_e) <= 1e-9 * scale
                         and abs((w[1] - w[0]) - oracle_gap) <= 1e-9 * max(oracle_gap, 1.0))
            rows.append({"check": "free_fermion", "ground_energy": float(w[0]),
                         "oracle_energy": oracle_e,
                         "gap": float(w[1] - w[0]), "oracle_gap": oracle_gap,
                         "pass": ff_ok})

    report = {"gap_ok": bool(gap_ok), "free_fermion_ok": ff_ok,
              "pass": bool(gap_ok and ff_ok)}
    return rows, report


def norms_table(cp, seed: int = 0):
    """Interaction norms over an (a, n) grid plus bulk norms over M."""
    setup = build_setup(cp)
    sec = "experiment"
    a_list = cfg_floats(cp, sec, "a_list", [0.25, 0.5, 1.0])
    n_list = [int(x) for x in cfg_get(cp, sec, "n_list", str, "0 1 2").split()]
    max_m = setup.meta["k"] if setup.meta["k"] is not None \
        else (setup.meta["n_sites"] - 1) // 2
    m_list = [int(x) for x in cfg_get(
        cp, sec, "m_list", str, " ".join(str(m) for m in range(1, max_m + 1))).split()]
    rows = []
    for a in a_list:
        for m in n_list:
            rows.append({"kind": "full", "a": a, "n": m, "M": "",
                         "value": interaction_norm(setup.h0_interaction, a, m)})
            for big_m in m_list:
                rows.append({"kind": "bulk", "a": a, "n": m, "M": big_m,
                             "value": bulk_interaction_norm(
                                 setup.h0_interaction, a, m, big_m)})
    return rows, {"pass": True}
