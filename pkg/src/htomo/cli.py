"""Command-line pipeline: simulate -> estimate -> evaluate, plus sweeps.

Subcommands
    simulate       draw homodyne data from a named state
    estimate       reconstruct a density matrix from a dataset file
    evaluate       distances between two state JSON files
    sweep          (n, seed, method) grid of reconstruction errors, resumable
    pattern-table  build/cache a pattern-function table, print sup-norm sums

State grammar: kind[:param[,param]], e.g. vacuum, fock:2, coherent:1.0,
coherent:0.5+0.5j, thermal:0.3, squeezed_vacuum:0.9, cat:1.5.

Every command writes a sidecar <out>.config.json recording its parameters,
and identical configurations produce byte-identical artifacts (seeded
counter-based RNG, repr float formatting, no timestamps).

Exit codes: 0 success, 2 usage or validation failure, 3 numerical failure.
The default pattern-table cache location may be set via the environment
variable HTOMO_PATTERN_CACHE.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import patterns
from .errors import DatasetFormatError, DomainError, NumericalError, SamplingError
from .estimators import (EstimateReport, choose_truncation, estimate_with_efficiency,
                         pattern_estimate, sieved_mle)
from .measurement import apply_efficiency, read_dataset, sample_homodyne, write_dataset
from .metrics import state_distances
from .states import (DensityMatrix, StateSpec, make_state, minimal_dim,
                     read_state_json, state_to_json_dict)

_ENV_CACHE = "HTOMO_PATTERN_CACHE"


def parse_state_spec(text: str, dim: int | None = None) -> StateSpec:
    """Parse the kind[:param[,param]] grammar into a StateSpec."""
    head, _, rest = text.partition(":")
    kind = head.strip().lower()
    args = [a for a in rest.split(",") if a.strip()] if rest else []
    if kind == "vacuum":
        kind, args = "fock", ["0"]
    if kind == "squeezed":
        kind = "squeezed_vacuum"
    try:
        if kind == "fock":
            params = (int(args[0]),)
        elif kind in ("coherent", "cat"):
            params = (complex(args[0]),)
        elif kind in ("thermal", "squeezed_vacuum"):
            params = (float(args[0]),)
        else:
            raise DomainError(f"unknown state kind {head!r}")
    except IndexError:
        raise DomainError(f"state {text!r}: missing parameter") from None
    except ValueError as exc:
        raise DomainError(f"state {text!r}: bad parameter ({exc})") from None
    if dim is None:
        if kind == "fock":
            dim = int(params[0]) + 4
        else:
            dim = max(4, minimal_dim(kind, params, 1e-8))
    return StateSpec(kind=kind, params=params, dim=int(dim))


def _json_ready(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def write_run_config(out_path: Path, command: str, params: dict) -> None:
    cfg = {"command": command}
    cfg.update({k: _json_ready(v) for k, v in sorted(params.items())})
    side = out_path.parent / (out_path.name + ".config.json")
    with open(side, "w") as fh:
        json.dump(cfg, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _load_table(n_needed: int, cache: str | None):
    path = cache or os.environ.get(_ENV_CACHE)
    if path and Path(path).exists():
        table = patterns.load_pattern_table(path)
        if table.max_index >= n_needed:
            return table
    table = patterns.build_pattern_table(max(n_needed, 8))
    if path:
        patterns.save_pattern_table(table, path)
    return table


def _report_json(report: EstimateReport) -> dict:
    out = {
        "method": report.method,
        "eta": report.eta,
        "sieve": {"N": report.sieve.N, "rule": report.sieve.rule,
                  "n": report.sieve.n, "warning": report.sieve.warning},
        "estimate": state_to_json_dict(report.estimate),
        "physical": isinstance(report.estimate, DensityMatrix),
        "constraint_residuals": {
            "min_eigenvalue": report.constraint_residuals.min_eigenvalue,
            "trace_error": report.constraint_residuals.trace_error,
        },
        "log_likelihood": report.log_likelihood,
        "converged": report.converged,
        "distances_to_truth": None,
    }
    if report.distances_to_truth is not None:
        d = report.distances_to_truth
        out["distances_to_truth"] = {"trace": d.trace, "hs": d.hs, "hellinger": d.hellinger}
    if report.estimate_meas is not None:
        out["estimate_meas"] = state_to_json_dict(report.estimate_meas)
    return out


def run_simulate(args) -> int:
    spec = parse_state_spec(args.state, args.dim)
    rho = make_state(spec)
    ds = sample_homodyne(rho, args.n, args.seed, workers=args.workers, source=spec)
    if args.eta is not None:
        ds = apply_efficiency(ds, args.eta, seed=args.seed + 1)
    out = Path(args.out)
    write_dataset(ds, out)
    write_run_config(out, "simulate", {
        "state": args.state, "dim": spec.dim, "n": args.n, "seed": args.seed,
        "eta": args.eta, "workers": args.workers, "out": args.out})
    return 0


def run_estimate(args) -> int:
    ds = read_dataset(args.input)
    if len(ds) == 0:
        raise DomainError("empty dataset")
    if args.N is not None:
        n_dim = args.N
    else:
        rule = args.rule or ("pattern_rate" if args.method == "pattern" else "mle_rate")
        n_dim = choose_truncation(len(ds), rule).N
    truth = read_state_json(args.truth) if args.truth else None
    table = _load_table(max(n_dim - 1, 1), args.pattern_cache)
    if ds.meta.eta != 1.0:
        opts = ({"max_iters": args.max_iters, "tol": args.tol, "restarts": args.restarts}
                if args.method == "mle" else {})
        report = estimate_with_efficiency(ds, N=n_dim, method=args.method, table=table,
                                          truth=truth, **opts)
    elif args.method == "pattern":
        report = pattern_estimate(ds, N=n_dim, table=table, truth=truth)
    else:
        report = sieved_mle(ds, N=n_dim, table=table, truth=truth,
                            max_iters=args.max_iters, tol=args.tol, restarts=args.restarts)
    out = Path(args.out)
    with open(out, "w") as fh:
        json.dump(_report_json(report), fh, sort_keys=True, indent=2)
        fh.write("\n")
    write_run_config(out, "estimate", {
        "in": args.input, "method": args.method, "N": n_dim, "rule": args.rule,
        "truth": args.truth, "out": args.out, "pattern_cache": args.pattern_cache})
    return 0


def run_evaluate(args) -> int:
    a = read_state_json(args.a)
    b = read_state_json(args.b)
    out = Path(args.out)
    with open(out, "w") as fh:
        json.dump(state_distances(a, b), fh, sort_keys=True, indent=2)
        fh.write("\n")
    write_run_config(out, "evaluate", {"a": args.a, "b": args.b, "out": args.out})
    return 0


_SWEEP_HEADER = "n,N,method,seed,trace_dist,hs_dist,hellinger"


def _sweep_cells(ns, seeds, methods):
    cells = [(n, choose_truncation(n, "pattern_rate" if m == "pattern" else "mle_rate").N, m, s)
             for n in ns for m in methods for s in seeds]
    return sorted(cells)


def _sweep_cell_result(spec, rho, cell, table):
    n, n_dim, method, seed = cell
    ds = sample_homodyne(rho, n, seed, source=spec)
    if method == "pattern":
        report = pattern_estimate(ds, N=n_dim, table=table, truth=rho)
    else:
        report = sieved_mle(ds, N=n_dim, table=table, truth=rho, restarts=2)
    d = report.distances_to_truth
    return (f"{n},{n_dim},{method},{seed},"
            f"{float(d.trace)!r},{float(d.hs)!r},{float(d.hellinger)!r}")


def run_sweep(args) -> int:
    spec = parse_state_spec(args.state, args.dim)
    rho = make_state(spec)
    ns = [int(v) for v in args.ns.split(",")]
    seeds = [int(v) for v in args.seeds.split(",")]
    methods = [m.strip() for m in args.methods.split(",")]
    for m in methods:
        if m not in ("pattern", "mle"):
            raise DomainError(f"unknown method {m!r}")
    cells = _sweep_cells(ns, seeds, methods)

    out = Path(args.out)
    existing: dict[tuple, str] = {}
    if out.exists():
        for line in out.read_text().splitlines()[1:]:
            parts = line.split(",")
            if len(parts) != 7:
                continue  # interrupted write; recompute that cell
            try:
                key = (int(parts[0]), int(parts[1]), parts[2], int(parts[3]))
                [float(p) for p in parts[4:]]
            except ValueError:
                continue
            existing[key] = line

    missing = [c for c in cells if c not in existing]
    if missing:
        n_max = max(c[1] for c in cells)
        table = _load_table(max(n_max - 1, 1), args.pattern_cache)
        if args.workers > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(max_workers=args.workers) as pool:
                rows = list(pool.map(lambda c: _sweep_cell_result(spec, rho, c, table), missing))
        else:
            rows = [_sweep_cell_result(spec, rho, c, table) for c in missing]
        for cell, row in zip(missing, rows):
            existing[cell] = row
        with open(out, "w") as fh:
            fh.write(_SWEEP_HEADER + "\n")
            for cell in cells:
                fh.write(existing[cell] + "\n")
    write_run_config(out, "sweep", {
        "state": args.state, "dim": spec.dim, "ns": args.ns, "seeds": args.seeds,
        "methods": args.methods, "out": args.out, "workers": args.workers,
        "pattern_cache": args.pattern_cache})
    return 0


def run_pattern_table(args) -> int:
    table = _load_table(args.max_index, args.pattern_cache)
    print(f"pattern table: max_index={table.max_index} grid_points={table.grid_points} "
          f"x_max={table.x_max:.6g}")
    sums = []
    n = 8
    while n <= table.max_index:
        sums.append((n, table.triangle_sum(n)))
        n *= 2
    if table.max_index not in [s[0] for s in sums]:
        sums.append((table.max_index, table.triangle_sum(table.max_index)))
    for n, s in sums:
        print(f"triangle_sum(N={n}) = {s!r}")
    if len(sums) >= 3:
        ls = np.log([s[0] for s in sums])
        lv = np.log([s[1] for s in sums])
        slope = np.polyfit(ls, lv, 1)[0]
        print(f"log-log growth slope over N in {[s[0] for s in sums]}: {slope:.4f}")
    top = sorted(((table.sup_norm(k, j), k, j)
                  for k in range(table.max_index + 1)
                  for j in range(k, table.max_index + 1)), reverse=True)[:5]
    for s, k, j in top:
        print(f"sup_norm(k={k}, j={j}) = {s!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="htomo",
                                     description="homodyne tomography simulation and reconstruction")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw homodyne samples from a known state")
    p.add_argument("--state", required=True, help="state spec, e.g. coherent:1.0")
    p.add_argument("--dim", type=int, default=None, help="Fock truncation (default: auto)")
    p.add_argument("--n", type=_nonneg_int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--eta", type=float, default=None, help="detector efficiency in (0,1)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=run_simulate)

    p = sub.add_parser("estimate", help="reconstruct a state from a dataset")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--method", choices=("pattern", "mle"), required=True)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--rule", choices=("pattern_rate", "mle_rate"), default=None)
    p.add_argument("--truth", default=None, help="state JSON to compare against")
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--pattern-cache", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=run_estimate)

    p = sub.add_parser("evaluate", help="distances between two state files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=run_evaluate)

    p = sub.add_parser("sweep", help="grid of reconstruction errors; resumable")
    p.add_argument("--state", required=True)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--ns", required=True, help="comma list of sample counts")
    p.add_argument("--seeds", required=True, help="comma list of seeds")
    p.add_argument("--methods", default="pattern,mle")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--pattern-cache", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=run_sweep)

    p = sub.add_parser("pattern-table", help="build a pattern table, print sup-norm sums")
    p.add_argument("--max-index", type=int, required=True)
    p.add_argument("--pattern-cache", default=None)
    p.set_defaults(func=run_pattern_table)
    return parser


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, DatasetFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SamplingError, NumericalError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
