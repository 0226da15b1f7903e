"""Command-line interface.

Subcommands: ingest (validate a price CSV), exact (brute-force ground
truth), vqe (run a configured experiment), report (re-aggregate existing
traces), sweep (grid over ansatz x optimizer x scheme x alpha).

Every config field can be overridden with a flag of the same dotted
name, e.g. ``--portfolio.lam 0.3 --optimizer.kind cobyla``. Exit codes:
0 success, 1 usage/config error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import experiment as xp
from .cost_functions import CostError
from .market_data import MarketDataError, load_prices, stats_from_prices
from .optimizers import OptimizerError
from .portfolio_qubo import (QuboProblem, QuboError, bits_to_string, index_to_bits,
                             solve_exact)

USAGE_ERROR = 1
RUNTIME_ERROR = 2

# dotted override name -> (section, field, parser)
_OVERRIDES: dict[str, tuple[str | None, str, type]] = {
    "data.path": ("data", "path", str),
    "data.variance_form": ("data", "variance_form", str),
    "portfolio.lam": ("portfolio", "lam", float),
    "portfolio.penalty": ("portfolio", "penalty", str),
    "portfolio.budget": ("portfolio", "budget", int),
    "ansatz.family": ("ansatz", "family", str),
    "ansatz.layers": ("ansatz", "layers", int),
    "cost.scheme": ("cost", "scheme", str),
    "cost.alpha": ("cost", "alpha", float),
    "cost.beta": ("cost", "beta", float),
    "cost.n1": ("cost", "n1", int),
    "cost.n2": ("cost", "n2", int),
    "cost.beta1": ("cost", "beta1", float),
    "cost.beta2": ("cost", "beta2", float),
    "cost.beta3": ("cost", "beta3", float),
    "optimizer.kind": ("optimizer", "kind", str),
    "optimizer.max_iterations": ("optimizer", "max_iterations", int),
    "optimizer.population": ("optimizer", "population", int),
    "optimizer.sigma0": ("optimizer", "sigma0", float),
    "optimizer.rho_begin": ("optimizer", "rho_begin", float),
    "optimizer.rho_end": ("optimizer", "rho_end", float),
    "shots": (None, "shots", int),
    "top_k": (None, "top_k", int),
    "n_repeats": (None, "n_repeats", int),
    "seed": (None, "seed", int),
}


def _add_override_flags(parser: argparse.ArgumentParser):
    for name, (_, _, typ) in _OVERRIDES.items():
        parser.add_argument(f"--{name}", dest=f"ov::{name}", type=typ, default=None,
                            help=argparse.SUPPRESS, metavar="V")


def _apply_overrides(doc: dict, args: argparse.Namespace) -> dict:
    for name, (section, fieldname, _) in _OVERRIDES.items():
        value = getattr(args, f"ov::{name}", None)
        if value is None:
            continue
        if name == "portfolio.penalty" and value != "auto":
            value = float(value)
        if section is None:
            doc[fieldname] = value
        else:
            doc.setdefault(section, {})[fieldname] = value
    return doc


def _load_config_doc(args) -> xp.ExperimentConfig:
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise xp.ConfigError(f"config: file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise xp.ConfigError(f"config: invalid JSON ({exc})") from exc
    else:
        doc = {}
    doc = _apply_overrides(doc, args)
    if "data" not in doc or "path" not in doc.get("data", {}):
        raise xp.ConfigError("data.path: required (via config file or --data.path)")
    return xp.config_from_dict(doc)


def _cmd_ingest(args) -> int:
    prices = load_prices(args.path)
    stats = stats_from_prices(prices)
    print(f"file: {args.path}")
    print(f"assets (N): {prices.n_assets}")
    print(f"time points (M): {prices.n_periods}  (returns: {prices.n_periods - 1})")
    print(f"range: {prices.time_labels[0]} .. {prices.time_labels[-1]}")
    print("asset            mu            sigma_ii")
    for name, mu, var in zip(prices.asset_names, stats.mu, np.diag(stats.sigma)):
        print(f"{name:<12s} {mu:>12.6g} {var:>15.6g}")
    return 0


def _cmd_exact(args) -> int:
    asset_names = None
    if args.qubo:
        qubo = QuboProblem.from_json(Path(args.qubo).read_text(encoding="utf-8"))
        spec_note = f"QUBO file {args.qubo}"
    else:
        cfg = _load_config_doc(args)
        instance = xp.build_instance(cfg)
        qubo = instance.qubo
        asset_names = instance.asset_names
        spec_note = (f"lam={instance.spec.lam} penalty={instance.spec.penalty:g} "
                     f"budget={instance.spec.budget}")
    solution = solve_exact(qubo, keep_spectrum=args.spectrum)
    bit_strs = [bits_to_string(index_to_bits(int(i), qubo.n))
                for i in solution.ground_indices]
    print(f"problem: n={qubo.n} ({spec_note})")
    print(f"ground energy: {solution.ground_energy!r}")
    print(f"degeneracy: {solution.degeneracy}")
    print(f"ground bitstring(s): {' or '.join(bit_strs)}  (bit 0 = asset 0)")
    if asset_names is not None:
        selected = [name for name, bit
                    in zip(asset_names, solution.ground_bitstring) if bit]
        print(f"selected assets: {', '.join(selected)}")
    if args.spectrum:
        print("index,bitstring,energy")
        for idx, energy in solution.spectrum:
            print(f"{idx},{bits_to_string(index_to_bits(idx, qubo.n))},{energy!r}")
    return 0


def _cmd_vqe(args) -> int:
    cfg = _load_config_doc(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    instance = xp.build_instance(cfg)
    records = []

    def flush(record):
        records.append(record)
        xp.write_trace(record, out_dir / f"run_{record.repeat:02d}.csv")
        print(f"repeat {record.repeat}: {record.cumulative_successes}"
              f"/{len(record.rows)} successful iterations,"
              f" best bitstring {record.best_bitstring}")

    for repeat in range(cfg.n_repeats):
        flush(xp.run_single(cfg, instance, repeat))
    xp.report(records, out_dir, cfg=cfg, instance=instance,
              wall_time_s=time.perf_counter() - t0)
    print(f"wrote {len(records)} trace(s) + aggregate.csv + summary.json to {out_dir}")
    return 0


def _cmd_report(args) -> int:
    traces = sorted(Path(args.runs).glob("run_*.csv"))
    if not traces:
        raise xp.ConfigError(f"runs: no run_*.csv files under {args.runs}")
    records = [_read_trace(path, repeat) for repeat, path in enumerate(traces)]
    out_dir = Path(args.out) if args.out else Path(args.runs)
    out_dir.mkdir(parents=True, exist_ok=True)
    xp.write_aggregate(records, out_dir / "aggregate.csv")
    print(f"aggregated {len(records)} trace(s) -> {out_dir / 'aggregate.csv'}")
    return 0


def _read_trace(path, repeat: int) -> xp.RunRecord:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = xp.TRACE_HEADER.split(",")
        if reader.fieldnames != expected:
            raise xp.ConfigError(f"runs: {path} header {reader.fieldnames} != {expected}")
        for line in reader:
            rows.append(xp.IterationRow(
                iteration=int(line["iteration"]), cost=float(line["cost"]),
                ground_prob=float(line["ground_prob"]),
                success=bool(int(line["success"])), params_digest=""))
    return xp.RunRecord(repeat=repeat, seed_key=(0, 0, repeat), rows=rows,
                        cumulative_successes=sum(r.success for r in rows),
                        best_bitstring="", best_bitstring_energy=float("nan"),
                        final_top_bitstring="", ground_bitstrings=[],
                        ground_energy=float("nan"), wall_time_s=0.0)


def _cmd_sweep(args) -> int:
    cfg = _load_config_doc(args)
    families = args.ansatzes.split(",")
    optimizers = args.optimizers.split(",")
    schemes = args.schemes.split(",")
    try:
        alphas = [float(a) for a in args.alphas.split(",")]
    except ValueError as exc:
        raise xp.ConfigError(f"alphas: {exc}") from exc
    iters = {"cmaes": args.cmaes_iterations, "cobyla": args.cobyla_iterations}
    cells = xp.sweep_cells(cfg, families, optimizers, schemes, alphas,
                           iterations_by_optimizer=iters)
    t0 = time.perf_counter()
    names = xp.run_sweep(cells, args.out, workers=args.workers)
    print(f"completed {len(names)} cells in {time.perf_counter() - t0:.1f}s -> {args.out}")
    for name in names:
        print(f"  {name}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vqe-portfolio",
        description="Portfolio selection via QUBO/Ising and a simulated VQE.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a closing-price CSV and print stats")
    p.add_argument("path")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("exact", help="brute-force ground truth for the QUBO")
    p.add_argument("--config", help="experiment config JSON")
    p.add_argument("--qubo", help="QUBO JSON file (bypasses market data)")
    p.add_argument("--spectrum", action="store_true", help="print the full spectrum")
    _add_override_flags(p)
    p.set_defaults(func=_cmd_exact)

    p = sub.add_parser("vqe", help="run the configured experiment")
    p.add_argument("--config", help="experiment config JSON")
    p.add_argument("--out", required=True, help="output directory")
    _add_override_flags(p)
    p.set_defaults(func=_cmd_vqe)

    p = sub.add_parser("report", help="re-aggregate existing trace CSVs")
    p.add_argument("runs", help="directory containing run_*.csv")
    p.add_argument("--out", help="output directory (default: runs dir)")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("sweep", help="grid over ansatz x optimizer x scheme x alpha")
    p.add_argument("--config", help="base experiment config JSON")
    p.add_argument("--out", required=True, help="output root directory")
    p.add_argument("--ansatzes", default="two_local,block")
    p.add_argument("--optimizers", default="cmaes,cobyla")
    p.add_argument("--schemes", default="cvar,piecewise_exp")
    p.add_argument("--alphas", default="1,0.5,0.25,0.1")
    p.add_argument("--cmaes-iterations", type=int, default=100)
    p.add_argument("--cobyla-iterations", type=int, default=150)
    p.add_argument("--workers", type=int, default=1)
    _add_override_flags(p)
    p.set_defaults(func=_cmd_sweep)
    return parser


def cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code else 0
    try:
        return args.func(args)
    except (xp.ConfigError, FileNotFoundError, MarketDataError, QuboError,
            CostError, OptimizerError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime failure: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


def main():
    sys.exit(cli())


if __name__ == "__main__":
    main()
