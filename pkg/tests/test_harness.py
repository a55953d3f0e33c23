import json
import math
import os

import numpy as np
import pytest

from neasslab.errors import (
    ConfigError,
    DynamicRangeTooSmall,
    FloorContamination,
    IoFailure,
)
from neasslab.harness import experiments
from neasslab.harness.cli import main
from neasslab.harness.config import (
    build_observables,
    build_potential,
    build_setup,
    cfg_floats,
    cfg_get,
    config_hash,
    load_config,
)
from neasslab.harness.csvio import export_csv
from neasslab.harness.experiments import fit_loglog_slope

SMALL_CFG = """
[lattice]
d = 1
k = 1
boundary = torus

[model]
T 1 = -1.0
staggered = 1.5
mu = 0.3

[perturbation]
kind = cos
amplitude = 0.8
switching = ramp 0 1

[observables]
A0 = density 0

[experiment]
n = 1
t0 = -0.2
t = 1.2
eta = 0.02
eps_grid = 0.2 0.126 0.0796 0.0502 0.0317 0.02
expected_slope = 2.0
slope_tolerance = 0.5
propagator_tol = 1e-8
"""


def write_cfg(tmp_path, text=SMALL_CFG, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# -- slope fitting ----------------------------------------------------------

def test_fit_loglog_synthetic_power_law():
    xs = [0.1, 0.05, 0.02, 0.01, 0.005]
    ys = [3.0 * x ** 2 for x in xs]
    slope, intercept, rms, nexc = fit_loglog_slope(xs, ys)
    assert abs(slope - 2.0) < 1e-10
    assert abs(intercept - math.log10(3.0)) < 1e-10
    assert rms < 1e-12 and nexc == 0


def test_fit_loglog_floor_exclusion():
    xs = [0.1, 0.05, 0.02, 0.01, 0.005, 0.002]
    ys = [x ** 2 for x in xs[:-1]] + [1e-15]  # last point at the noise floor
    slope, _, _, nexc = fit_loglog_slope(xs, ys, floor=1e-13)
    assert nexc == 1
    assert abs(slope - 2.0) < 1e-10


def test_fit_loglog_guards():
    with pytest.raises(DynamicRangeTooSmall):
        fit_loglog_slope([0.1, 0.05, 0.02], [1, 1, 1])  # too few points
    with pytest.raises(DynamicRangeTooSmall):
        fit_loglog_slope([0.1, 0.09, 0.08, 0.07], [1, 1, 1, 1])  # < 1 decade
    with pytest.raises(FloorContamination):
        fit_loglog_slope([0.1, 0.05, 0.02, 0.01], [0.0, 0.0, 0.0, 0.0],
                         floor=1e-13)


# -- CSV emission -----------------------------------------------------------

def test_csv_deterministic_and_tagged(tmp_path):
    rows = [{"a": 1, "b": 0.1, "flag": True},
            {"a": 2, "b": 0.2, "flag": False, "extra": "x"}]
    p1, p2 = tmp_path / "one.csv", tmp_path / "two.csv"
    export_csv(rows, p1, schema="demo", meta_hash="cafe")
    export_csv(rows, p2, schema="demo", meta_hash="cafe")
    b1, b2 = p1.read_bytes(), p2.read_bytes()
    assert b1 == b2
    text = b1.decode()
    assert text.startswith("schema,meta_hash,a,b,flag,extra\r\n")
    assert "demo-v1,cafe,1,0.10000000000000001,true," in text


def test_csv_refuses_empty(tmp_path):
    with pytest.raises(IoFailure):
        export_csv([], tmp_path / "no.csv", schema="demo")


# -- config parsing ---------------------------------------------------------

def test_config_parsing_and_hash(tmp_path):
    path = write_cfg(tmp_path)
    cp = load_config(path)
    assert cfg_get(cp, "lattice", "k", int) == 1
    assert cfg_get(cp, "experiment", "missing", int, 7) == 7
    assert cfg_floats(cp, "experiment", "eps_grid")[0] == 0.2
    with pytest.raises(ConfigError):
        cfg_get(cp, "experiment", "missing", int, required=True)
    with pytest.raises(ConfigError):
        cfg_get(cp, "lattice", "boundary", int)  # not castable
    h0 = config_hash(cp, 0)
    assert h0 != config_hash(cp, 1)
    cp.set("experiment", "n", "2")
    assert h0 != config_hash(cp, 0)


def test_config_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/path.cfg")


def test_build_setup_and_potential(tmp_path):
    cp = load_config(write_cfg(tmp_path))
    setup = build_setup(cp)
    assert setup.meta["k"] == 1 and setup.meta["n_sites"] == 3
    assert setup.h0.is_static()  # no [drive] section
    assert not setup.v.value(0.5).matrix.max() == 0.0  # mid-ramp: V on
    assert np.abs(setup.v.value(-1.0).matrix).max() == 0.0  # pre-ramp: V off
    v_op = build_potential(cp, setup.lattice, setup.space)
    # cos potential: diagonal in the number basis
    assert np.abs(v_op.matrix - np.diag(np.diag(v_op.matrix))).max() == 0.0


def test_build_setup_k_override(tmp_path):
    cp = load_config(write_cfg(tmp_path))
    setup = build_setup(cp, k_override=2)
    assert setup.meta["n_sites"] == 5


def test_observables_kinds_and_seed_stability(tmp_path):
    text = SMALL_CFG.replace(
        "A0 = density 0",
        "A0 = density 0\nA1 = current 0 1\nA2 = random 2")
    cp = load_config(write_cfg(tmp_path, text))
    setup = build_setup(cp)
    obs = build_observables(cp, setup.space, seed=3)
    names = [n for n, _ in obs]
    assert names == ["A0", "A1", "A2"]
    for _, op in obs:
        assert op.is_self_adjoint and op.is_even
    # same seed reproduces the random observable exactly
    obs2 = build_observables(cp, setup.space, seed=3)
    assert np.array_equal(obs[2][1].matrix, obs2[2][1].matrix)
    obs3 = build_observables(cp, setup.space, seed=4)
    assert not np.array_equal(obs[2][1].matrix, obs3[2][1].matrix)


def test_bad_config_keys(tmp_path):
    cp = load_config(write_cfg(tmp_path, SMALL_CFG + "\n[model2]\n"))
    cp.set("model", "bogus", "1")
    with pytest.raises(ConfigError):
        build_setup(cp)
    cp2 = load_config(write_cfg(tmp_path))
    cp2.set("perturbation", "kind", "sawtooth")
    with pytest.raises(ConfigError):
        build_potential(cp2, build_setup(cp2).lattice, None)


def test_defect_sweep_grid_validation(tmp_path):
    cp = load_config(write_cfg(tmp_path))
    cp.set("experiment", "eta_grid", "0.1 0.05")
    with pytest.raises(ConfigError):
        experiments.run_defect_sweep(cp)


# -- experiments and determinism --------------------------------------------

def test_defect_sweep_thread_count_invariance(tmp_path):
    cp = load_config(write_cfg(tmp_path))
    rows1, rep1 = experiments.run_defect_sweep(cp, seed=0, threads=1)
    rows4, rep4 = experiments.run_defect_sweep(cp, seed=0, threads=4)
    p1, p4 = tmp_path / "t1.csv", tmp_path / "t4.csv"
    export_csv(rows1, p1, "defect_sweep", config_hash(cp, 0))
    export_csv(rows4, p4, "defect_sweep", config_hash(cp, 0))
    assert p1.read_bytes() == p4.read_bytes()
    assert rep1 == rep4


def test_model_check_free_fermion(tmp_path):
    cp = load_config(write_cfg(tmp_path))
    rows, report = experiments.model_check(cp, seed=0)
    assert report["pass"]
    checks = {r["check"] for r in rows}
    assert {"gap", "norm", "lipschitz", "free_fermion"} <= checks


def test_norms_table(tmp_path):
    cp = load_config(write_cfg(tmp_path))
    rows, report = experiments.norms_table(cp, seed=0)
    assert report["pass"]
    full = [r for r in rows if r["kind"] == "full"]
    bulk = [r for r in rows if r["kind"] == "bulk"]
    assert full and bulk
    assert all(r["value"] >= 0.0 for r in rows)


# -- CLI --------------------------------------------------------------------

def test_cli_model_check(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "out"
    code = main(["model", "check", "--config", cfg, "--out", str(out)])
    assert code == 0
    assert (out / "model_check.csv").exists()
    report = json.loads((out / "model_check_report.json").read_text())
    assert report["pass"] is True


def test_cli_defect_sweep_with_figure(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "out"
    code = main(["sweep", "defect", "--config", cfg, "--out", str(out)])
    assert code == 0
    assert (out / "defect_sweep.csv").exists()
    assert (out / "defect_sweep.png").exists()


def test_cli_no_plot_and_failure_exit(tmp_path):
    text = SMALL_CFG.replace("expected_slope = 2.0",
                             "expected_slope = 9.0").replace(
        "slope_tolerance = 0.5", "slope_tolerance = 0.1")
    cfg = write_cfg(tmp_path, text)
    out = tmp_path / "out"
    code = main(["sweep", "defect", "--config", cfg, "--out", str(out),
                 "--no-plot"])
    assert code == 2  # fitted slope misses the declared window
    assert not (out / "defect_sweep.png").exists()


def test_cli_error_exit(tmp_path):
    code = main(["model", "check", "--config", str(tmp_path / "missing.cfg")])
    assert code == 1


def test_cli_generator_build(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "out"
    code = main(["neass", "build", "--config", cfg, "--out", str(out),
                 "--time", "0.5", "--mu", "0.4", "--order", "2"])
    assert code == 0
    from neasslab.neass import load_generator
    gen = load_generator(out / "generator.txt")
    assert gen.order == 2 and gen.mu == 0.4
