"""Command line front end.

Three subcommands:

- ``solve``: run seed minimization on one dataset at one target, writing
  per-run CSVs, the certificate trace, rendered figures and a manifest.
- ``bench``: sweep a list of targets and write aggregate curves.
- ``oracle-check``: run the exact-oracle verification battery.

Set ``ASM_LOG=info`` (or ``debug``) for progress logging. Exit codes:
0 success, 1 runtime failure (recorded in MANIFEST.json when the output
directory exists), 2 bad configuration.
"""

from __future__ import annotations

import argparse
import gzip
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .adaptive import POLICIES, run_experiment
from .checks import run_all
from .diffusion import sample_many, save_realization
from .graph import GraphFormatError, ProbGraph, load_edge_list
from . import report

log = logging.getLogger("seedmin.cli")

_POLICY_ALIASES = {"asti": "adaptive", "greedy": "adaptive"}


class ConfigError(Exception):
    """Bad command line or dataset configuration (exit code 2)."""


def resolve_eta(raw: str, n: int) -> int:
    """Parse a target: values with a decimal point are fractions of n."""
    raw = raw.strip()
    try:
        if "." in raw or "e" in raw or "E" in raw:
            frac = float(raw)
            if not 0.0 < frac <= 1.0:
                raise ConfigError(f"target fraction must be in (0, 1], got {raw}")
            return max(1, int(frac * n))
        eta = int(raw)
    except ValueError:
        raise ConfigError(f"cannot parse target {raw!r}") from None
    if not 1 <= eta <= n:
        raise ConfigError(f"target must be in 1..{n}, got {eta}")
    return eta


def parse_policies(raw: str) -> list[str]:
    names = []
    for token in raw.split(","):
        token = token.strip().lower()
        if not token:
            continue
        token = _POLICY_ALIASES.get(token, token)
        if token not in POLICIES:
            raise ConfigError(f"unknown policy {token!r}; expected one of "
                              f"{POLICIES} (aliases: {sorted(_POLICY_ALIASES)})")
        if token not in names:
            names.append(token)
    if not names:
        raise ConfigError("no policies given")
    return names


def load_dataset(args) -> ProbGraph:
    path = Path(args.dataset)
    if not path.exists():
        raise ConfigError(f"dataset not found: {path}")
    weighting = args.weighting.replace("-", "_")
    try:
        if path.suffix == ".gz":
            with gzip.open(path, "rt") as fh:
                g = load_edge_list(fh, model=args.model, weighting=weighting,
                                   undirected=args.undirected, dense_ids=args.dense_ids)
        else:
            g = load_edge_list(path, model=args.model, weighting=weighting,
                               undirected=args.undirected, dense_ids=args.dense_ids)
    except GraphFormatError as exc:
        raise ConfigError(f"bad dataset: {exc}") from exc
    log.info("loaded %s: %d nodes, %d edges (%s)", path.name, g.n, g.m, args.model)
    return g


def _validate_run_params(args):
    if not 0.0 < args.eps < 1.0:
        raise ConfigError(f"--eps must be in (0, 1), got {args.eps}")
    if args.batch < 1:
        raise ConfigError(f"--batch must be at least 1, got {args.batch}")
    if args.realizations < 1:
        raise ConfigError(f"--realizations must be at least 1, got {args.realizations}")


def _write_solve_outputs(out: Path, g, table, config):
    files = []
    files.append(report.write_summary_csv(table.rows, out / "summary.csv"))
    files.append(report.write_timings_csv(table.reports, table.rows,
                                          out / "timings.csv"))
    files.append(report.write_rounds_csv(table.reports, table.rows, out / "rounds.csv"))
    files.append(report.write_selection_trace_csv(table.reports, table.rows,
                                                  out / "selection_trace.csv"))
    files.append(report.write_spread_csv(table.rows, out / "spread_distribution.csv"))
    files.append(report.write_size_hist_csv(table.reports, table.rows,
                                            out / "sample_size_histogram.csv"))
    files.append(report.write_id_map_csv(g, out / "id_map.csv"))
    files.append(report.fig_spread_distribution(table.rows, table.eta,
                                                out / "spread_distribution.png"))
    return files


def cmd_solve(args) -> int:
    _validate_run_params(args)
    g = load_dataset(args)
    eta = resolve_eta(args.eta, g.n)
    policies = parse_policies(args.policies)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = {
        "command": "solve", "version": __version__,
        "dataset": str(args.dataset), "model": args.model,
        "weighting": args.weighting, "undirected": args.undirected,
        "n": g.n, "m": g.m, "eta_raw": args.eta, "eta": eta,
        "eps": args.eps, "batch": args.batch, "realizations": args.realizations,
        "policies": policies, "seed": args.seed, "threads": args.threads,
    }
    files = []
    failures = []
    try:
        phis = sample_many(g, args.model, args.realizations, args.seed)
        rdir = out / "realizations"
        rdir.mkdir(exist_ok=True)
        for rid, phi in enumerate(phis):
            rpath = rdir / f"r{rid:03d}.bin"
            save_realization(phi, rpath)
            files.append(rpath)
        t0 = time.perf_counter()
        table = run_experiment(g, eta, eps=args.eps, b=args.batch,
                               policies=policies, master_seed=args.seed,
                               realizations=phis, threads=args.threads)
        log.info("ran %d runs in %.1fs", len(table.rows), time.perf_counter() - t0)
        files += _write_solve_outputs(out, g, table, config)
        for policy in policies:
            sub = [r for r in table.rows if r["policy"] == policy]
            print(f"{policy}: mean seeds {np.mean([r['seeds'] for r in sub]):.2f}, "
                  f"mean spread {np.mean([r['final_spread'] for r in sub]):.1f} "
                  f"(target {eta}), mean wall {np.mean([r['wall_ms'] for r in sub]):.0f} ms")
    except (ValueError, RuntimeError, OSError) as exc:
        log.exception("solve failed")
        failures.append(f"{type(exc).__name__}: {exc}")
    files.append(report.write_manifest(out / "MANIFEST.json", config, files, failures))
    if failures:
        print(f"FAILED: {failures[0]}", file=sys.stderr)
        return 1
    print(f"wrote {len(files)} files to {out}")
    return 0


def cmd_bench(args) -> int:
    _validate_run_params(args)
    g = load_dataset(args)
    policies = parse_policies(args.policies)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tokens = [t.strip() for t in args.etas.split(",") if t.strip()]
    if not tokens:
        raise ConfigError("no targets given")
    etas = [(tok, resolve_eta(tok, g.n)) for tok in tokens]
    config = {
        "command": "bench", "version": __version__,
        "dataset": str(args.dataset), "model": args.model,
        "weighting": args.weighting, "undirected": args.undirected,
        "n": g.n, "m": g.m, "etas": [e for _, e in etas],
        "eps": args.eps, "batch": args.batch, "realizations": args.realizations,
        "policies": policies, "seed": args.seed, "threads": args.threads,
    }
    bench_rows = []
    failures = []
    files = []
    try:
        for tok, eta in etas:
            t0 = time.perf_counter()
            table = run_experiment(g, eta, eps=args.eps, b=args.batch,
                                   policies=policies, master_seed=args.seed,
                                   num_realizations=args.realizations,
                                   model=args.model, threads=args.threads)
            log.info("eta %d done in %.1fs", eta, time.perf_counter() - t0)
            for policy in policies:
                sub = [r for r in table.rows if r["policy"] == policy]
                bench_rows.append({
                    "eta_raw": tok,
                    "eta": eta,
                    "eta_fraction": f"{eta / g.n:.6f}",
                    "policy": policy,
                    "runs": len(sub),
                    "mean_seeds": f"{np.mean([r['seeds'] for r in sub]):.4f}",
                    "std_seeds": f"{np.std([r['seeds'] for r in sub]):.4f}",
                    "mean_spread": f"{np.mean([r['final_spread'] for r in sub]):.2f}",
                    "mean_samples": f"{np.mean([r['total_samples'] for r in sub]):.1f}",
                    "mean_wall_ms": f"{np.mean([r['wall_ms'] for r in sub]):.3f}",
                })
        files.append(report.write_bench_seeds_csv(bench_rows, out / "bench_seeds.csv"))
        files.append(report.write_bench_times_csv(bench_rows, out / "bench_times.csv"))
        files.append(report.fig_seeds_vs_eta(bench_rows, out / "seeds_vs_eta.png"))
        files.append(report.fig_time_vs_eta(bench_rows, out / "time_vs_eta.png"))
        for policy in policies:
            walls = [float(r["mean_wall_ms"]) for r in bench_rows
                     if r["policy"] == policy]
            if walls != sorted(walls):  # expected trend, not a contract
                log.warning("%s wall time is not monotone in the target", policy)
        for row in bench_rows:
            print(f"eta {row['eta']} {row['policy']}: mean seeds {row['mean_seeds']}, "
                  f"mean wall {row['mean_wall_ms']} ms")
    except (ValueError, RuntimeError, OSError) as exc:
        log.exception("bench failed")
        failures.append(f"{type(exc).__name__}: {exc}")
    files.append(report.write_manifest(out / "MANIFEST.json", config, files, failures))
    if failures:
        print(f"FAILED: {failures[0]}", file=sys.stderr)
        return 1
    print(f"wrote {len(files)} files to {out}")
    return 0


def cmd_oracle_check(args) -> int:
    results = run_all(num_graphs=args.graphs, instances=args.instances, seed=args.seed)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def _add_common(p):
    p.add_argument("--dataset", required=True, help="edge list file (.gz accepted)")
    p.add_argument("--model", choices=["ic", "lt"], default="ic")
    p.add_argument("--weighting", choices=["inv-indeg", "explicit"], default="inv-indeg",
                   help="edge probabilities: 1/indegree or third column of the file")
    p.add_argument("--undirected", action="store_true",
                   help="insert both directions for every listed edge")
    p.add_argument("--dense-ids", action="store_true",
                   help="keep node ids as written instead of compacting gaps")
    p.add_argument("--eps", type=float, default=0.5, help="per-round accuracy")
    p.add_argument("--batch", type=int, default=1, help="seeds selected per round")
    p.add_argument("--realizations", type=int, default=20,
                   help="independent ground-truth cascades per policy")
    p.add_argument("--policies", default="adaptive,vanilla",
                   help="comma list; asti is an alias for adaptive")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="seedmin",
                                 description="adaptive seed minimization on "
                                             "probabilistic influence graphs")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="one dataset, one target")
    _add_common(ps)
    ps.add_argument("--eta", required=True,
                    help="activation target: integer count, or fraction if it "
                         "contains a decimal point")
    ps.set_defaults(fn=cmd_solve)

    pb = sub.add_parser("bench", help="sweep several targets")
    _add_common(pb)
    pb.add_argument("--etas", default="0.01,0.05,0.1,0.15,0.2",
                    help="comma list of targets, same syntax as --eta")
    pb.set_defaults(fn=cmd_bench)

    pc = sub.add_parser("oracle-check", help="verify sampling against the exact oracle")
    pc.add_argument("--graphs", type=int, default=100,
                    help="random instances for the sandwich sweep")
    pc.add_argument("--instances", type=int, default=200,
                    help="random instances for the greedy-cover check")
    pc.add_argument("--seed", type=int, default=0)
    pc.set_defaults(fn=cmd_oracle_check)
    return ap


def main(argv=None) -> int:
    level = os.environ.get("ASM_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        ap.error("--threads must be at least 1")
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
