"""Command-line interface.

    neasslab model check   --config cfg [--out DIR] [--seed N] [--threads N]
    neasslab neass build   --config cfg ...
    neasslab sweep defect  --config cfg ...
    neasslab sweep lifetime --config cfg ...
    neasslab tdl           --config cfg ...
    neasslab norms         --config cfg ...

Exit codes: 0 pass, 2 acceptance failure (a fitted exponent or a gap check
outside its declared window), 1 error.  Every report writes deterministic
CSV; sweep reports additionally render log-log figures next to the CSV.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from ..errors import NeassLabError
from ..neass import build_generators, pinned_orientation, save_generator
from .config import build_setup, cfg_get, config_hash, load_config
from .csvio import export_csv
from . import experiments

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_ACCEPTANCE = 2


def _common(sub):
    sub.add_argument("--config", required=True)
    sub.add_argument("--out", default=".")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--threads", type=int, default=1)
    sub.add_argument("--no-plot", action="store_true",
                     help="skip figure rendering")


def build_parser():
    p = argparse.ArgumentParser(prog="neasslab")
    sub = p.add_subparsers(dest="cmd", required=True)

    model = sub.add_parser("model").add_subparsers(dest="sub", required=True)
    _common(model.add_parser("check"))

    neass = sub.add_parser("neass").add_subparsers(dest="sub", required=True)
    b = neass.add_parser("build")
    _common(b)
    b.add_argument("--time", type=float, default=0.0)
    b.add_argument("--mu", type=float, default=0.0)
    b.add_argument("--order", type=int, default=1)

    sweep = sub.add_parser("sweep").add_subparsers(dest="sub", required=True)
    _common(sweep.add_parser("defect"))
    _common(sweep.add_parser("lifetime"))

    _common(sub.add_parser("tdl"))
    _common(sub.add_parser("norms"))
    return p


def _emit(rows, report, args, name, cp, plot_spec=None):
    os.makedirs(args.out, exist_ok=True)
    meta = config_hash(cp, args.seed)
    csv_path = os.path.join(args.out, f"{name}.csv")
    export_csv(rows, csv_path, schema=name, meta_hash=meta)
    report_path = os.path.join(args.out, f"{name}_report.json")
    with open(report_path, "w") as f:
        json.dump(report, f, indent=2, sort_keys=True, default=str)
    print(f"wrote {csv_path}")
    if plot_spec and not args.no_plot:
        from . import plots
        for fname, fn in plot_spec:
            path = os.path.join(args.out, fname)
            try:
                fn(plots, path)
                print(f"wrote {path}")
            except Exception as e:  # figures are best-effort reporting
                print(f"plot {fname} failed: {e}", file=sys.stderr)
    for key, val in sorted(report.get("fits", {}).items()):
        print(f"  fit[{key}]: {val}")
    verdict = report.get("pass")
    if verdict is None:
        print("no acceptance target declared; reporting only")
        return EXIT_PASS
    print("PASS" if verdict else "FAIL")
    return EXIT_PASS if verdict else EXIT_ACCEPTANCE


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cp = load_config(args.config)
        if args.cmd == "model":
            rows, report = experiments.model_check(cp, args.seed)
            return _emit(rows, report, args, "model_check", cp)
        if args.cmd == "neass":
            setup = build_setup(cp)
            gen = build_generators(setup.h0, setup.v, args.time, args.mu,
                                   args.order)
            os.makedirs(args.out, exist_ok=True)
            path = os.path.join(args.out, "generator.txt")
            save_generator(gen, path)
            print(f"wrote {path}")
            print(f"orientation {gen.orientation}  residuals {gen.residuals}")
            return EXIT_PASS
        if args.cmd == "sweep" and args.sub == "defect":
            rows, report = experiments.run_defect_sweep(
                cp, args.seed, args.threads)
            axis = report["axis"]
            good = [r for r in rows if not r["error"]]
            plot_spec = [("defect_sweep.png", lambda plots, p: plots.plot_loglog(
                good, axis, "defect", p, group_key="observable",
                title=f"adiabatic defect vs {axis} (n={report['n']})"))]
            return _emit(rows, report, args, "defect_sweep", cp, plot_spec)
        if args.cmd == "sweep" and args.sub == "lifetime":
            rows, report = experiments.lifetime_experiment(
                cp, args.seed, args.threads)
            s_max = max(r["s"] for r in rows)
            tail = [r for r in rows if r["s"] == s_max]
            plot_spec = [("lifetime.png", lambda plots, p: plots.plot_loglog(
                tail, "eps", "drift", p, group_key="observable",
                title=f"dressed-state drift at s={s_max}"))]
            return _emit(rows, report, args, "lifetime", cp, plot_spec)
        if args.cmd == "tdl":
            rows, report = experiments.tdl_convergence_experiment(
                cp, args.seed, args.threads)
            decaying = [r for r in rows if r["k"] != report["k_max"]
                        and r["kind"] == "ground"]
            plot_spec = []
            if decaying:
                plot_spec = [("tdl_convergence.png",
                              lambda plots, p: plots.plot_decay(
                                  decaying, "k", "diff_to_kmax", p,
                                  title="convergence to the largest box"))]
            report.setdefault("pass", None)
            return _emit(rows, report, args, "tdl", cp, plot_spec)
        if args.cmd == "norms":
            rows, report = experiments.norms_table(cp, args.seed)
            return _emit(rows, report, args, "norms", cp)
        raise NeassLabError(f"unhandled command {args.cmd}")
    except NeassLabError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
