"""Sectioned key-value experiment configs and model construction from them.

Grammar (INI-style sections, keys are case-sensitive, values whitespace
separated; see README for the full reference):

    [lattice]
    d = 1              # box dimension (with k), or use: chain = 6
    k = 3
    boundary = torus   # open | torus
    r = 1

    [model]
    mu = 0.3
    T 1 = -1.0         # "T <displacement coords>" -> r*r row-major entries
    phi 0 = 0.8        # "phi <site coords>" -> r*r entries
    staggered = 1.5    # shorthand: phi(x) += delta * (-1)^{sum coords}
    W 1 = 0.2          # "W <distance>" -> r*r entries

    [drive]            # optional: H0(t) = H_model + f(t) * (drive terms)
    switching = ramp 0 1
    staggered = -0.5   # same shorthands as [model], hopping included

    [perturbation]     # V(t) = g(t) * V
    kind = cos         # cos | linear | staggered | site
    amplitude = 1.0
    switching = ramp 0 1

    [observables]
    A0 = density 0
    A1 = current 0 1
    A2 = random 2      # random even self-adjoint op on 2 central sites

    [experiment]       # free-form keys read by the individual experiments
    n = 1
    ...
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..fock import (
    FockSpace,
    LocalOperator,
    creation_op,
    density_op,
    random_even_operator,
)
from ..interactions import Interaction, assemble_operator
from ..lattice import Boundary, Lattice, build_chain, build_lattice
from ..models import (
    ModelParams,
    TimeDependentOperator,
    build_example_hamiltonian,
)
from ..switching import Constant, parse_switching


def load_config(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        with open(path) as f:
            cp.read_file(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    except configparser.Error as e:
        raise ConfigError(f"config parse error in {path}: {e}") from None
    return cp


def cfg_get(cp, section, key, cast=str, default=None, required=False):
    if not cp.has_option(section, key):
        if required:
            raise ConfigError(f"[{section}] missing required key '{key}'")
        return default
    raw = cp.get(section, key)
    try:
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except ValueError:
        raise ConfigError(
            f"[{section}] {key} = {raw!r}: cannot parse as {cast.__name__}") from None


def cfg_floats(cp, section, key, default=None, required=False):
    raw = cfg_get(cp, section, key, str, None, required)
    if raw is None:
        return default
    try:
        return [float(x) for x in raw.split()]
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected numbers, got {raw!r}") from None


def config_hash(cp, seed) -> str:
    """Stable digest of the full config plus the seed (run provenance)."""
    h = hashlib.sha256()
    for section in sorted(cp.sections()):
        for key in sorted(cp.options(section)):
            h.update(f"{section}\x00{key}\x00{cp.get(section, key)}\x00".encode())
    h.update(str(seed).encode())
    return h.hexdigest()[:16]


# -- model assembly --------------------------------------------------------

def _parse_entries(raw, r, where):
    vals = raw.split()
    if len(vals) != r * r:
        raise ConfigError(f"{where}: expected {r * r} entries, got {len(vals)}")
    try:
        m = np.array([complex(v) for v in vals]).reshape(r, r)
    except ValueError:
        raise ConfigError(f"{where}: bad matrix entry in {raw!r}") from None
    return m


def _params_from_section(cp, section, lat, r) -> ModelParams:
    T, phi, W = {}, {}, {}
    mu = cfg_get(cp, section, "mu", float, 0.0)
    for key in cp.options(section):
        parts = key.split()
        raw = cp.get(section, key)
        if parts[0] == "T":
            disp = tuple(int(c) for c in parts[1:])
            T[disp] = _parse_entries(raw, r, f"[{section}] {key}")
        elif parts[0] == "phi":
            site = tuple(int(c) for c in parts[1:])
            phi[site] = _parse_entries(raw, r, f"[{section}] {key}")
        elif parts[0] == "W":
            W[int(parts[1])] = _parse_entries(raw, r, f"[{section}] {key}")
        elif key in ("mu", "staggered", "switching"):
            pass
        else:
            raise ConfigError(f"[{section}] unknown key '{key}'")
    stag = cfg_get(cp, section, "staggered", float, None)
    if stag is not None:
        for x in lat.sites:
            delta = stag * (-1.0) ** sum(x)
            phi[x] = phi.get(x, np.zeros((r, r), complex)) + delta * np.eye(r)
    return ModelParams(r=r, T=T, phi=phi, W=W, mu=mu)


def potential_values(cp, lat: Lattice) -> dict:
    """Site -> value table of the perturbing potential from [perturbation]."""
    kind = cfg_get(cp, "perturbation", "kind", str, "cos")
    amp = cfg_get(cp, "perturbation", "amplitude", float, 1.0)
    n = lat.n_sites
    values = {}
    if kind == "cos":
        # torus-compatible Lipschitz potential, one full period across the box
        for x in lat.sites:
            values[x] = amp * math.cos(2.0 * math.pi * x[0] / n)
    elif kind == "linear":
        for x in lat.sites:
            values[x] = amp * x[0]
    elif kind == "staggered":
        for x in lat.sites:
            values[x] = amp * (-1.0) ** sum(x)
    elif kind == "site":
        where = cfg_get(cp, "perturbation", "site", str, "0")
        x = tuple(int(c) for c in where.split())
        values[x] = amp
    else:
        raise ConfigError(f"[perturbation] unknown kind '{kind}'")
    return values


def build_potential(cp, lat: Lattice, space: FockSpace) -> LocalOperator:
    """The perturbation operator V = sum_x v(x) n_x from [perturbation]."""
    values = potential_values(cp, lat)
    m = np.zeros((space.dim, space.dim), dtype=complex)
    support = []
    for x, v in values.items():
        if v == 0.0:
            continue
        support.append(x)
        for i in range(space.r):
            m += v * density_op(space, x, i).matrix
    return LocalOperator(space, m, support=tuple(support))


def bond_current(space: FockSpace, x, y) -> LocalOperator:
    """J_{xy} = i (a*_x a_y - a*_y a_x), summed over internal indices."""
    m = np.zeros((space.dim, space.dim), dtype=complex)
    for i in range(space.r):
        cx = creation_op(space, x, i).matrix
        cy = creation_op(space, y, i).matrix
        m += 1j * (cx @ cy.conj().T - cy @ cx.conj().T)
    return LocalOperator(space, m, support=(tuple(x), tuple(y)))


def build_observables(cp, space: FockSpace, seed: int) -> list[tuple[str, LocalOperator]]:
    """Observable panel from [observables]; defaults to the central density."""
    lat = space.lattice
    out = []
    if not cp.has_section("observables"):
        center = lat.sites[len(lat.sites) // 2]
        return [("density_center", density_op(space, center))]
    rng = np.random.default_rng(seed)
    for key in cp.options("observables"):
        spec = cp.get("observables", key).split()
        kind = spec[0]
        if kind == "density":
            x = tuple(int(c) for c in spec[1:])
            op = density_op(space, x)
        elif kind == "current":
            half = (len(spec) - 1) // 2
            x = tuple(int(c) for c in spec[1:1 + half])
            y = tuple(int(c) for c in spec[1 + half:])
            op = bond_current(space, x, y)
        elif kind == "random":
            width = int(spec[1])
            sites = lat.sub_box((width - 1) // 2)[:width] if lat.radius is not None \
                else lat.sub_box((width - 1) // 2)
            op = random_even_operator(space, rng, self_adjoint=True,
                                      support=tuple(sites)[:width])
            op = LocalOperator(space, op.matrix / op.norm, support=op.support)
        else:
            raise ConfigError(f"[observables] unknown kind '{kind}'")
        out.append((key, op))
    return out


@dataclass
class Setup:
    """Everything an experiment needs, assembled from one config."""

    lattice: Lattice
    space: FockSpace
    params: ModelParams
    h0_interaction: Interaction
    h0: TimeDependentOperator
    v: TimeDependentOperator
    v_op: LocalOperator
    meta: dict = field(default_factory=dict)


def build_setup(cp, k_override=None) -> Setup:
    r = cfg_get(cp, "lattice", "r", int, 1)
    chain = cfg_get(cp, "lattice", "chain", int, None)
    boundary = cfg_get(cp, "lattice", "boundary", str, "open")
    if boundary not in ("open", "torus"):
        raise ConfigError(f"[lattice] boundary must be open|torus, got {boundary!r}")
    if chain is not None and k_override is None:
        lat = build_chain(chain, boundary, r=r)
    else:
        d = cfg_get(cp, "lattice", "d", int, 1)
        k = k_override if k_override is not None else cfg_get(
            cp, "lattice", "k", int, required=True)
        lat = build_lattice(d, k, boundary, r=r)
    space = FockSpace(lat, r)

    params = _params_from_section(cp, "model", lat, r)
    inter = build_example_hamiltonian(lat, space, params)
    h_base = assemble_operator(inter, space)

    pieces = [(Constant(1.0), h_base)]
    if cp.has_section("drive"):
        dswitch = parse_switching(cfg_get(cp, "drive", "switching", str, "ramp 0 1"))
        dparams = _params_from_section(cp, "drive", lat, r)
        dinter = build_example_hamiltonian(lat, space, dparams)
        pieces.append((dswitch, assemble_operator(dinter, space)))
    h0 = TimeDependentOperator(space, pieces)

    if cp.has_section("perturbation"):
        v_op = build_potential(cp, lat, space)
        vswitch = parse_switching(
            cfg_get(cp, "perturbation", "switching", str, "constant 1"))
    else:
        v_op = LocalOperator(space, np.zeros((space.dim, space.dim), complex),
                             support=())
        vswitch = Constant(0.0)
    v = TimeDependentOperator(space, [(vswitch, v_op)])

    meta = {"d": lat.dimension, "k": lat.radius, "boundary": boundary,
            "r": r, "n_sites": lat.n_sites}
    return Setup(lattice=lat, space=space, params=params, h0_interaction=inter,
                 h0=h0, v=v, v_op=v_op, meta=meta)
