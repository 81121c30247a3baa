"""``catforge`` command line: state, simulate, tomo, table1, sweep."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
import warnings
from pathlib import Path

from .errors import CatforgeError, ConvergenceWarning, DataError, ParameterError
from .fock import (
    DEFAULT_DIM,
    SCParams,
    odd_cat,
    parity_of,
    photon_distribution,
    sc_state,
)
from .homodyne import (
    QuadratureRecords,
    TemporalMode,
    double_exp_mode,
    extract_all,
    fit_temporal_mode,
    read_traces,
    sample_quadratures,
    synthesize_traces,
    variance_curve,
    write_traces,
)
from .pipeline import PUMP_TABLE, ExperimentConfig, run_pipeline
from .reproduce import TABLE1_COLUMNS, analyse_state, run_table1
from .runs import RunManifest, load_manifest
from .tomo import TomoConfig, maxlik_reconstruct, wigner_origin
from .wigner import tabulate, wigner_analytic

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4
KINDS = {"cat": "cat", "psc": "p-SC", "xsc": "x-SC"}


def _g(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_g(v) for v in row])
    return buf.getvalue()


def _theta(text: str) -> float:
    t = text.strip().lower()
    if t in ("0", "0.0"):
        return 0.0
    if t == "pi":
        return math.pi
    raise argparse.ArgumentTypeError("theta2 must be 0 or pi")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, default=Path("runs"), help="parent directory for run folders")
    p.add_argument("--force", action="store_true", help="overwrite an existing run folder")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--dim", type=int, default=None)


def _experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="ExperimentConfig JSON; flags override it")
    p.add_argument("--r1", type=float)
    p.add_argument("--r2", type=float)
    p.add_argument("--theta2", type=_theta)
    p.add_argument("--pump-mw", type=float, help="map a tabulated OPA2 pump power to r2 (needs --theta2)")
    p.add_argument("--tap", type=float)
    p.add_argument("--eta-opa2", type=float)
    p.add_argument("--eta-det", type=float)
    p.add_argument("--jitter", type=float, dest="phase_jitter_sd")
    p.add_argument("--dark-mix", type=float)
    p.add_argument("--herald-model", choices=["ideal_subtraction", "tap_povm"])


def resolve_config(args) -> ExperimentConfig:
    data = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            data = json.load(fh)
    for name in ("r1", "r2", "theta2", "tap", "eta_opa2", "eta_det", "phase_jitter_sd", "dark_mix", "herald_model", "dim"):
        val = getattr(args, name, None)
        if val is not None:
            data[name] = val
    if getattr(args, "pump_mw", None) is not None:
        kind = "psc" if data.get("theta2", 0.0) == 0.0 else "xsc"
        key = (kind, float(args.pump_mw))
        if key not in PUMP_TABLE:
            raise ParameterError(f"no tabulated r2 for {kind} at {args.pump_mw} mW")
        data["r2"] = PUMP_TABLE[key]
    return ExperimentConfig.from_dict(data)


# ---------------------------------------------------------------- state


def cmd_state(args) -> int:
    kind = args.kind
    r = 0.0 if kind == "cat" else args.r
    if args.alpha is None or not args.alpha > 0:
        raise ParameterError("--alpha must be > 0")
    if r < 0:
        raise ParameterError("--r must be >= 0")
    dim = args.dim or DEFAULT_DIM
    theta = math.pi if kind == "xsc" else 0.0
    vec = odd_cat(args.alpha, dim) if kind == "cat" else sc_state(SCParams(args.alpha, r, theta), dim)
    rho = vec.density()
    bounds = (-args.extent, args.extent, -args.extent, args.extent)
    resolved = {"kind": kind, "alpha": args.alpha, "r": r, "dim": dim, "bounds": bounds, "n": args.grid_n}
    run = RunManifest.open(args.out, "state", resolved, {}, args.force)
    grid = tabulate(wigner_analytic(kind, args.alpha, r), bounds, args.grid_n, args.grid_n)
    run.write_text("wigner.csv", grid.to_csv())
    run.write_json("density.json", {"dim": dim, "state": rho.to_dict()})
    pn = photon_distribution(rho)
    run.write_text("photon_distribution.csv", _csv(["n", "probability"], enumerate(pn)))
    w00 = float(wigner_analytic(kind, args.alpha, r)(0.0, 0.0))
    report = {
        "kind": kind,
        "alpha": args.alpha,
        "r": r,
        "theta": theta,
        "dim": dim,
        "W00": w00,
        "W00_fock": wigner_origin(rho),
        "parity": parity_of(rho),
        "odd_parity": parity_of(rho) == "odd",
        "grid": {"bounds": bounds, "nx": args.grid_n, "np": args.grid_n, "integral": grid.integral()},
    }
    run.write_json("report.json", report)
    print(run.finalize())
    return EXIT_OK


# ---------------------------------------------------------------- simulate


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    resolved = {
        "label": cfg.label,
        "experiment": cfg.to_dict(),
        "n_traces": args.n_traces,
        "mode": {"gamma": args.mode_gamma, "t0": args.mode_t0, "L": args.trace_length},
        "records_only": args.records_only,
    }
    run = RunManifest.open(args.out, "simulate", resolved, {"traces": args.seed}, args.force)
    with run.timed("pipeline"):
        res = run_pipeline(cfg)
    run.write_json("pre_detection.json", {"dim": cfg.dim, "state": res.pre_detection.to_dict()})
    run.write_json("at_detector.json", {"dim": cfg.dim, "state": res.at_detector.to_dict()})
    mode = double_exp_mode(args.mode_gamma, args.mode_t0, args.trace_length)
    run.write_json("planted_mode.json", mode.to_dict())
    with run.timed("synthesis"):
        if args.records_only:
            recs = sample_quadratures(res.at_detector, args.n_traces, rng_seed=args.seed)
            recs.to_csv(run.register("records.csv"))
        else:
            traces = synthesize_traces(res.at_detector, mode, args.n_traces, rng_seed=args.seed)
            write_traces(run.register("traces.catf"), traces)
    report = {
        "label": cfg.label,
        "config": cfg.to_dict(),
        "herald": dataclasses.asdict(res.herald),
        "W00_raw": wigner_origin(res.at_detector),
        "W00_pre_detection": wigner_origin(res.pre_detection),
        "parity_pre_detection": parity_of(res.pre_detection),
    }
    run.write_json("report.json", report)
    print(run.finalize())
    return EXIT_OK


# ---------------------------------------------------------------- tomo


def _infer_kind(args, source: Path) -> str:
    if args.kind:
        return KINDS[args.kind]
    man = load_manifest(source.parent)
    if man and "experiment" in man.get("config", {}):
        return ExperimentConfig.from_dict(man["config"]["experiment"]).label
    raise ParameterError("cannot infer the state kind; pass --kind")


def cmd_tomo(args) -> int:
    if bool(args.traces) == bool(args.records):
        raise ParameterError("pass exactly one of --traces or --records")
    source = Path(args.traces or args.records)
    if not source.exists():
        raise DataError(f"{source} not found")
    kind = _infer_kind(args, source)
    dim = args.dim or DEFAULT_DIM
    tomo = TomoConfig(
        dim=dim,
        eta_correction=args.eta_correction,
        max_iters=args.max_iters,
        convergence_tol=args.tol,
        bin_width=args.bin_width,
    )
    resolved = {"source": str(source.resolve()), "kind": kind, "tomo": dataclasses.asdict(tomo), "mode_file": str(args.mode) if args.mode else None}
    run = RunManifest.open(args.out, "tomo", resolved, {}, args.force)
    report: dict = {"kind": kind, "tomo": dataclasses.asdict(tomo)}
    with run.timed("extract"):
        if args.traces:
            traces = read_traces(source)
            curve = variance_curve(traces)
            run.write_text("variance_curve.csv", _csv(["t", "variance"], enumerate(curve)))
            if args.mode:
                with open(args.mode) as fh:
                    mode = TemporalMode.from_dict(json.load(fh))
                report["mode_source"] = "file"
            else:
                mode, diag = fit_temporal_mode(curve, full_output=True)
                report["mode_fit"] = diag
                report["mode_source"] = "fit"
            run.write_json("fitted_mode.json", mode.to_dict())
            records = extract_all(traces, mode)
            records.to_csv(run.register("records.csv"))
        else:
            records = QuadratureRecords.from_csv(source)
    with run.timed("maxlik"):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ConvergenceWarning)
            ml = maxlik_reconstruct(records, tomo)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    run.write_json("density.json", {"dim": dim, "state": ml.rho.to_dict()})
    with run.timed("fit"):
        fit = analyse_state(ml.rho, kind)
    f = fit.pop("fit")
    report.update(
        {
            "alpha_hat": fit["alpha"],
            "r_hat": fit["r"],
            "theta": f.theta,
            "F": fit["F"],
            "W00": fit["W00"],
            "converged": ml.converged,
            "iterations": ml.iterations,
            "loglik_final": float(ml.loglik[-1]),
            "n_records": len(records),
        }
    )
    run.write_json("report.json", report)
    run.write_text("fidelity_surface.csv", _csv(["alpha", "r", "fidelity"], f.surface_rows()))
    print(run.finalize())
    if args.strict_convergence and not ml.converged:
        print("catforge: error: maximum likelihood did not converge", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


# ---------------------------------------------------------------- table1 / sweep


def cmd_table1(args) -> int:
    cfg = resolve_config(args)
    resolved = {"experiment": cfg.to_dict(), "mode": args.mode, "n_traces": args.n_traces}
    run = RunManifest.open(args.out, "table1", resolved, {"base": args.seed}, args.force)
    with run.timed("rows"):
        rows = run_table1(cfg, args.mode, args.n_traces, args.seed)
    run.write_text("table1.csv", _csv(TABLE1_COLUMNS, ([row[c] for c in TABLE1_COLUMNS] for row in rows)))
    run.write_json("table1.json", {"rows": rows, "config": cfg.to_dict(), "mode": args.mode})
    for row in rows:
        print(
            f"{row['state']:5s} P={_g(row['pump_mw']) or '-':>4s}  F={row['F']:.3f}  "
            f"alpha={row['alpha']:.2f}  r={row['r']:.2f}  W00={row['W00']:+.3f}"
        )
    print(run.finalize())
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    values = [float(v) for v in args.r2_values.split(",") if v.strip()]
    resolved = {"experiment": cfg.to_dict(), "r2_values": values}
    run = RunManifest.open(args.out, "sweep", resolved, {}, args.force)
    rows = []
    for r2 in values:
        c = cfg.replace(r2=r2)
        res = run_pipeline(c)
        fit = analyse_state(res.pre_detection, c.label)
        rows.append([c.label, r2, fit["F"], fit["alpha"], fit["r"], fit["W00"], wigner_origin(res.at_detector)])
    run.write_text("sweep.csv", _csv(["state", "r2", "F", "alpha", "r", "W00", "W00_raw"], rows))
    print(run.finalize())
    return EXIT_OK


# ---------------------------------------------------------------- entry


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="catforge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("state", help="emit an ideal cat / p-SC / x-SC state and its Wigner grid")
    _common(p)
    p.add_argument("--kind", choices=sorted(KINDS), default="cat")
    p.add_argument("--alpha", type=float, default=1.06)
    p.add_argument("--r", type=float, default=0.0)
    p.add_argument("--extent", type=float, default=5.0)
    p.add_argument("--grid-n", type=int, default=201)
    p.set_defaults(func=cmd_state)

    p = sub.add_parser("simulate", help="run the preparation pipeline and synthesize homodyne traces")
    _common(p)
    _experiment_flags(p)
    p.add_argument("--n-traces", type=int, default=50000)
    p.add_argument("--mode-gamma", type=float, default=0.02)
    p.add_argument("--mode-t0", type=float, default=250.0)
    p.add_argument("--trace-length", type=int, default=500)
    p.add_argument("--records-only", action="store_true", help="write quadrature CSV instead of traces")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tomo", help="fit the temporal mode, reconstruct and fit a run's data")
    _common(p)
    p.add_argument("--traces", type=Path)
    p.add_argument("--records", type=Path)
    p.add_argument("--mode", type=Path, help="temporal-mode JSON; fitted from the variance curve if absent")
    p.add_argument("--kind", choices=sorted(KINDS))
    p.add_argument("--eta-correction", type=float, default=0.80)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--bin-width", type=float, default=None)
    p.add_argument(
        "--strict-convergence", action="store_true", help="exit with status 4 if the iteration does not converge"
    )
    p.set_defaults(func=cmd_tomo)

    p = sub.add_parser("table1", help="cat baseline plus the six tabulated SC settings")
    _common(p)
    _experiment_flags(p)
    p.add_argument("--n-traces", type=int, default=50000)
    p.add_argument("--mode", choices=["tomography", "exact"], default="tomography")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("sweep", help="noise-free fits of the pre-detection state over r2 values")
    _common(p)
    _experiment_flags(p)
    p.add_argument("--r2-values", default="0,0.1,0.2,0.27,0.29,0.3,0.4")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CatforgeError as exc:
        print(f"catforge: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"catforge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, ValueError) else EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
