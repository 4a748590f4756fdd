"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .errors import ConfigError, NumericalError
from .experiment import (
    ExperimentConfig,
    load_config,
    reproduce_table,
    run_experiment,
    scan_global_fano,
    table_csv,
    write_atomic,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

_ENGINE = {"evolve": "quantum", "classical": "classical", "ensemble": "semiclassical", "analytic": "analytic", "qfunc": "quantum"}


def _complex_arg(text):
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _common(p):
    p.add_argument("--config", help="JSON configuration file; flags override its fields")
    p.add_argument("--seed", type=_u64, help="noise seed (semiclassical runs)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--tail-tol", type=float, help="Fock tail-mass tolerance per mode")
    p.add_argument("--threads", type=int, help="worker threads")


def _run_flags(p, sub):
    p.add_argument("--order", "-N", type=int, help="harmonic order N")
    p.add_argument("--coupling", type=float, help="coupling g")
    p.add_argument("--alpha1", type=_complex_arg, help="fundamental amplitude, e.g. 6 or 6+0.5j")
    p.add_argument("--alphaN", "--alpha2", dest="alphaN", type=_complex_arg, help="harmonic amplitude")
    p.add_argument("--net-r", type=float, help="no-energy-transfer input alpha1 = N r, alphaN = r")
    p.add_argument("--t-end", type=float, help="final gt of a uniform grid from 0")
    p.add_argument("--tau", type=float, nargs=2, metavar=("LO", "HI"), help="scaled-time grid tau = omega_bar g t")
    p.add_argument("--samples", type=int, help="grid points")
    p.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"), help="summary window in tau")
    p.add_argument("--tol", type=float, help="integrator tolerance")
    p.add_argument("--quad-angle", type=float, help="quadrature angle in radians")
    if sub == "ensemble":
        p.add_argument("--count", type=int, help="trajectories")
        p.add_argument("--sigma2", type=float, help="noise variance per quadrature")
        p.add_argument("--snapshot", type=float, nargs="+", help="gt values of cloud snapshots")
    if sub == "evolve":
        p.add_argument("--quadrature", action="store_true", help="also write quadrature variances")
    if sub == "qfunc":
        p.add_argument("--times", type=float, nargs="+", help="gt values of the Q grids")
        p.add_argument("--mode", type=int, help="1 or N")
        p.add_argument("--resolution", type=int, help="points per axis")
        p.add_argument("--center", type=_complex_arg)
        p.add_argument("--half-extent", type=float)


def build_parser():
    parser = argparse.ArgumentParser(prog="harmstat", description="Photon statistics of harmonic generation.")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("evolve", "exact quantum evolution"),
        ("classical", "classical coupled-mode trajectory"),
        ("ensemble", "classical-trajectory Monte Carlo"),
        ("analytic", "closed-form NET predictions"),
        ("qfunc", "Husimi Q-function grids of the quantum state"),
    ):
        p = subs.add_parser(name, help=help_text)
        _common(p)
        _run_flags(p, name)
    p = subs.add_parser("scan-global-fano", help="harmonic global Fano factor over an amplitude grid")
    _common(p)
    p.add_argument("--order", "-N", type=int)
    p.add_argument("--alpha1-range", type=float, nargs=3, metavar=("LO", "HI", "STEP"))
    p.add_argument("--alpha2-range", type=float, nargs=3, metavar=("LO", "HI", "STEP"))
    p.add_argument("--horizon", type=float, help="averaging horizon in gt (default: infinite)")
    p = subs.add_parser("reproduce-table", help="quasi-stationary Fano factors against NET closed forms")
    _common(p)
    p.add_argument("--table", choices=("1", "2"))
    p.add_argument("--orders", type=int, nargs="+", help="harmonic orders (subset of 1..5)")
    p.add_argument("--r", type=float, help="harmonic amplitude r (alpha1 = N r)")
    p.add_argument("--samples", type=int, help="window samples")
    return parser


def _base_config(args):
    return load_config(args.config) if args.config else {}


def _experiment_config(args):
    d = _base_config(args)
    d["engine"] = _ENGINE[args.command]
    model = dict(d.get("model", {}))
    if args.order is not None:
        model["order"] = args.order
    if args.coupling is not None:
        model["coupling"] = args.coupling
    d["model"] = model
    inp = dict(d.get("input", {}))
    if args.net_r is not None:
        inp = {"net_r": args.net_r}
    for key in ("alpha1", "alphaN"):
        v = getattr(args, key)
        if v is not None:
            inp.pop("net_r", None)
            inp[key] = [v.real, v.imag]
    d["input"] = inp
    grid = dict(d.get("grid", {}))
    if args.t_end is not None:
        grid.pop("tau", None)
        grid["t_end"] = args.t_end
    if args.tau is not None:
        grid.pop("t_end", None)
        grid["tau"] = list(args.tau)
    if args.samples is not None:
        grid["samples"] = args.samples
    if grid:
        d["grid"] = grid
    for flag, key in (("window", "window"), ("tol", "tol"), ("quad_angle", "quad_angle"), ("tail_tol", "tail_tol"), ("threads", "threads"), ("out", "out")):
        v = getattr(args, flag)
        if v is not None:
            d[key] = list(v) if isinstance(v, list) else v
    if args.command == "ensemble":
        noise = dict(d.get("noise", {}))
        for flag in ("count", "sigma2"):
            if getattr(args, flag) is not None:
                noise[flag] = getattr(args, flag)
        if args.seed is not None:
            noise["seed"] = args.seed
        d["noise"] = noise
        if args.snapshot:
            d["snapshot_times"] = args.snapshot
            d["observables"] = sorted(set(d.get("observables", [])) | {"cloud"})
    elif args.seed is not None and "noise" in d and d["engine"] == "semiclassical":
        d["noise"]["seed"] = args.seed
    if args.command == "evolve" and args.quadrature:
        d["observables"] = sorted(set(d.get("observables", [])) | {"fano", "quadrature"})
    if args.command == "qfunc":
        q = dict(d.get("qfunc", {}))
        for flag in ("times", "mode", "resolution", "half_extent"):
            if getattr(args, flag) is not None:
                q[flag] = getattr(args, flag)
        if args.center is not None:
            q["center"] = [args.center.real, args.center.imag]
        q.setdefault("times", [0.0])
        d["qfunc"] = q
        # Q grids are taken at qfunc.times; the moment grid is only a placeholder
        d.setdefault("grid", {"t_end": max(max(q["times"]), 1.0), "samples": 2})
        d["observables"] = ["qfunc"]
    d.setdefault("out", f"harmstat-{args.command}")
    return ExperimentConfig.from_dict(d)


def _arange(spec, name):
    lo, hi, step = spec
    if step <= 0 or hi < lo:
        raise ConfigError("expected LO <= HI and STEP > 0", name)
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def _scan(args):
    d = _base_config(args)
    order = args.order if args.order is not None else d.get("order", 2)
    a1 = _arange(args.alpha1_range or d.get("alpha1_range", [1.0, 8.0, 0.5]), "alpha1_range")
    a2 = _arange(args.alpha2_range or d.get("alpha2_range", [0.5, 4.0, 0.5]), "alpha2_range")
    horizon = args.horizon if args.horizon is not None else d.get("horizon", math.inf)
    horizon = math.inf if horizon is None else float(horizon)
    tail = args.tail_tol if args.tail_tol is not None else d.get("tail_tol", 1e-12)
    threads = args.threads if args.threads is not None else d.get("threads", 1)
    out = args.out or d.get("out", "harmstat-scan-global-fano")
    if not isinstance(order, int) or order < 1:
        raise ConfigError("must be an integer >= 1", "order")
    scan = scan_global_fano(a1, a2, order, horizon, tail, threads)
    os.makedirs(out, exist_ok=True)
    diag = []
    for i, x in enumerate(scan.alpha1):
        for j, y in enumerate(scan.alpha2):
            if abs(x - order * y) < 1e-9 and not np.isnan(scan.values[i, j]):
                diag.append(float(scan.values[i, j]))
    finite = scan.values[~np.isnan(scan.values)]
    summary = {
        "engine": "quantum",
        "N": order,
        "horizon": "inf" if math.isinf(horizon) else horizon,
        "ridge": [{"alpha1": a, "alpha2": b, "FG": v} for a, b, v in scan.ridge()],
        "FG_min": float(finite.min()) if finite.size else None,
        "diagonal_max": max(diag) if diag else None,
        "undefined_cells": int(np.isnan(scan.values).sum()),
    }
    write_atomic(os.path.join(out, "global_fano.csv"), scan.to_csv())
    write_atomic(os.path.join(out, "summary.json"), json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def _table(args):
    d = _base_config(args)
    which = "table" + (args.table or str(d.get("table", 2)))
    orders = args.orders or d.get("orders", [1, 2, 3])
    r = args.r if args.r is not None else d.get("r", 5.0)
    tail = args.tail_tol if args.tail_tol is not None else d.get("tail_tol", 1e-12)
    samples = args.samples if args.samples is not None else d.get("samples", 2001)
    out = args.out or d.get("out", f"harmstat-{which}")
    rows = reproduce_table(which, orders, r, tail, samples=samples)
    os.makedirs(out, exist_ok=True)
    write_atomic(os.path.join(out, f"{which}.csv"), table_csv(rows))
    summary = {
        "table": which,
        "r": r,
        "window": [50.0, 150.0],
        "rows": [
            {
                "N": row.N,
                "quantum": row.quantum,
                "quantum_rms": row.quantum_rms,
                "closed_form": str(row.closed_form),
                "deviation": row.deviation,
                "cutoffs": row.cutoffs,
                "status": row.status,
            }
            for row in rows
        ],
    }
    write_atomic(os.path.join(out, "summary.json"), json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads is not None and args.threads < 1:
            raise ConfigError("must be >= 1", "threads")
        if args.tail_tol is not None and not 0 < args.tail_tol < 1:
            raise ConfigError("must lie in (0, 1)", "tail_tol")
        if args.command == "scan-global-fano":
            summary = _scan(args)
        elif args.command == "reproduce-table":
            summary = _table(args)
        else:
            summary = run_experiment(_experiment_config(args)).summary
    except ConfigError as exc:
        print(f"harmstat: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, FloatingPointError) as exc:
        print(f"harmstat: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
