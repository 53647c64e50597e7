"""Command-line front end.

Exit codes: 0 success, 2 usage or config error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import warnings

from . import estimator as est
from .config import SCHEMA_VERSION, ConfigError, dump_config, load_config
from .pipeline import readout_channel, run_scenario, sweep
from .polariton import analyze_storage
from .readout import CountRecords, max_ground_atoms
from .report import claims_report, render_report, report_table

EXIT_USAGE = 2
EXIT_IO = 3


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _count(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer count, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"counts must be >= 0, got {value}")
    return value


def _echo_defaults(defaulted, cfg, out) -> None:
    if not defaulted:
        return
    print("defaults used:", file=out)
    for path in defaulted:
        sec, key = path.split(".")
        print(f"  {path} = {cfg[sec][key]}", file=out)


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def cmd_analyze(args) -> int:
    scenario, cfg, defaulted = load_config(args.config)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        storage = analyze_storage(scenario.species, scenario.ensemble, scenario.ramp, scenario.pulse)
        mu1, bg, _ = readout_channel(scenario)
    eps = scenario.estimator.epsilon
    n_max = est.max_countable_n(est.PoissonChannel(mu1, bg), eps)
    rows = [
        ("optical depth alpha", storage.optical_depth, ""),
        ("mixing angle theta (Omega_c max)", storage.mixing_angle_initial, "rad"),
        ("transparency bandwidth", storage.transparency_bandwidth, "rad/s"),
        ("transparency bandwidth", storage.transparency_bandwidth / (2 * math.pi), "Hz"),
        ("group velocity", storage.group_velocity, "m/s"),
        ("compressed pulse length", storage.compressed_length, "m"),
        ("compressed / medium length", storage.compressed_length / scenario.ensemble.length, ""),
        ("adiabaticity margin", storage.adiabaticity_margin, ""),
        ("eta bandwidth", storage.eta_bandwidth, ""),
        ("eta fit", storage.eta_fit, ""),
        ("eta adiabatic", storage.eta_adiabatic, ""),
        ("eta storage (model)", storage.eta_storage, ""),
        ("eta storage (used)", storage.eta_storage if scenario.eta_store is None else scenario.eta_store, ""),
        ("mu1 (counts per excitation)", mu1, "counts"),
        ("background", bg, "counts"),
        ("N_max (ground atoms)", max_ground_atoms(scenario.species), "atoms"),
        (f"n_max (eps={eps:g})", n_max, "photons"),
        ("n_max heuristic (mu1)", mu1, "photons"),
    ]
    width = max(len(r[0]) for r in rows)
    for name, value, unit in rows:
        print(f"{name.ljust(width)}  {value:.6g} {unit}".rstrip())
    for w in caught:
        print(f"warning: {w.message}")
    _echo_defaults(defaulted, cfg, sys.stdout)
    return 0


def cmd_simulate(args) -> int:
    scenario, cfg, defaulted = load_config(args.config)
    overrides = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    scenario = dataclasses.replace(scenario, **overrides)
    cfg["run"].update({k: v for k, v in overrides.items() if k in cfg["run"]})
    cfg["run"]["workers"] = 1  # parallelism never changes the output
    result = run_scenario(scenario, keep_records=args.records is not None)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg,
        "defaults_used": defaulted,
        "result": result.to_dict(),
    }
    text = json.dumps(doc, indent=2) + "\n"
    try:
        if args.out:
            _write_text(args.out, text)
        else:
            sys.stdout.write(text)
        if args.records:
            CountRecords.concat(result.records).to_csv(args.records)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    print(
        f"efficiency exact {result.efficiency_exact:.6f}  monte carlo {result.efficiency_empirical:.6f} "
        f"+/- {result.efficiency_stderr:.2g}",
        file=sys.stderr if not args.out else sys.stdout,
    )
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def cmd_classify(args) -> int:
    channel = est.PoissonChannel(args.mu1, args.bg, args.n_top)
    n_hat = est.classify(args.counts, channel)
    for k, n in zip(args.counts, n_hat):
        print(f"{k}\t{n}")
    bounds = est.decision_thresholds(channel)
    print("thresholds (largest count per n): " + " ".join(f"{n}:{b}" for n, b in enumerate(bounds)))
    return 0


def cmd_sweep(args) -> int:
    scenario, cfg, defaulted = load_config(args.config)
    if args.trials is not None:
        scenario = dataclasses.replace(scenario, trials=args.trials)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    try:
        points = sweep(scenario, args.param, args.values)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    doc = {
        "schema_version": SCHEMA_VERSION,
        "param": args.param,
        "config": cfg,
        "points": [{"value": v, **summary} for v, summary in points],
    }
    if args.out:
        try:
            _write_text(args.out, json.dumps(doc, indent=2) + "\n")
        except OSError as exc:
            print(f"error: cannot write output: {exc}", file=sys.stderr)
            return EXIT_IO
    cols = ["value", "mu1", "bg", "eta_store", "n_max", "efficiency_exact", "efficiency_empirical"]
    print("  ".join(f"{c:>20}" for c in cols))
    for p in doc["points"]:
        print("  ".join(f"{p[c]:>20.6g}" for c in cols))
    return 0


def cmd_report(args) -> int:
    rows = claims_report(seed=args.seed)
    if args.json:
        sys.stdout.write(json.dumps({"schema_version": SCHEMA_VERSION, "rows": report_table(rows)}, indent=2) + "\n")
    else:
        sys.stdout.write(render_report(rows))
    return 0


def cmd_config(args) -> int:
    _, cfg, _ = load_config(args.config)
    sys.stdout.write(dump_config(cfg))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stoppedlight", description="Stopped-light photon counter simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="closed-form design quantities")
    p.add_argument("--config", help="YAML scenario file (defaults: nominal)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="Monte Carlo + exact confusion matrices")
    p.add_argument("--config")
    p.add_argument("--trials", type=_positive_int, help="trials per input photon state")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=_positive_int, help="threads; output does not depend on it")
    p.add_argument("--out", help="result JSON path (stdout if omitted)")
    p.add_argument("--records", help="per-trial CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("classify", help="maximum-likelihood photon number for raw counts")
    p.add_argument("--mu1", type=float, required=True)
    p.add_argument("--bg", type=float, default=0.0)
    p.add_argument("--n-top", type=_positive_int, default=None)
    p.add_argument("--counts", type=_count, nargs="+", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sweep", help="re-run a scenario over values of one parameter")
    p.add_argument("--config")
    p.add_argument("--param", required=True, help="dotted path, e.g. readout.eta_s")
    p.add_argument("--values", type=float, nargs="*", default=[])
    p.add_argument("--trials", type=_positive_int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="stated vs formula vs simulated desk numbers")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("config", help="print the materialized config")
    p.add_argument("--config")
    p.set_defaults(func=cmd_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
