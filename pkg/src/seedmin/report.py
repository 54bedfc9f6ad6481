"""Delimited outputs and report figures.

Every run artifact is a plain CSV with a fixed column order. Wall-clock
measurements live in their own files (timings.csv, bench_times.csv) so
that every other CSV is byte-identical across reruns of the same seeded
configuration. Figures are rendered next to the CSVs they are derived
from.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

SUMMARY_COLUMNS = ["policy", "realization_id", "seeds", "final_spread", "rounds",
                   "total_samples"]
TIMINGS_COLUMNS = ["policy", "realization_id", "wall_select_ms", "wall_observe_ms",
                   "wall_total_ms"]
ROUNDS_COLUMNS = ["policy", "realization_id", "round", "n_residual", "target_residual",
                  "selected", "newly_activated", "iterations", "samples", "coverage",
                  "ratio", "stop"]
TRACE_COLUMNS = ["policy", "realization_id", "round", "t", "num_samples", "coverage",
                 "lower", "upper", "ratio", "stop_reason"]


def _write_csv(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow(row)
    return path


def write_summary_csv(rows, path):
    """One row per (policy, realization); deterministic for a fixed seed."""
    out = [{k: r[k] for k in SUMMARY_COLUMNS} for r in rows]
    return _write_csv(path, SUMMARY_COLUMNS, out)


def write_timings_csv(reports, rows, path):
    """Wall-clock per run; the one solve output that varies between reruns."""
    out = []
    for meta, rep in zip(rows, reports):
        out.append({
            "policy": meta["policy"],
            "realization_id": meta["realization_id"],
            "wall_select_ms": f"{rep.wall_select_s * 1000:.3f}",
            "wall_observe_ms": f"{rep.wall_observe_s * 1000:.3f}",
            "wall_total_ms": f"{rep.wall_total_s * 1000:.3f}",
        })
    return _write_csv(path, TIMINGS_COLUMNS, out)


def write_rounds_csv(reports, rows, path):
    """One row per adaptive round of every run."""
    out = []
    for meta, rep in zip(rows, reports):
        for rec in rep.rounds:
            out.append({
                "policy": meta["policy"],
                "realization_id": meta["realization_id"],
                "round": rec.index,
                "n_residual": rec.n_residual,
                "target_residual": rec.target_residual,
                "selected": ";".join(str(v) for v in rec.selected),
                "newly_activated": rec.newly_activated,
                "iterations": rec.outcome.iterations,
                "samples": rec.outcome.samples_used,
                "coverage": rec.outcome.coverage,
                "ratio": f"{rec.outcome.ratio:.6f}",
                "stop": rec.outcome.stop,
            })
    return _write_csv(path, ROUNDS_COLUMNS, out)


def write_selection_trace_csv(reports, rows, path):
    """One row per doubling iteration: the certificate audit trail."""
    out = []
    for meta, rep in zip(rows, reports):
        for rec in rep.rounds:
            for it in rec.outcome.detail:
                out.append({
                    "policy": meta["policy"],
                    "realization_id": meta["realization_id"],
                    "round": rec.index,
                    "t": it.t,
                    "num_samples": it.num_samples,
                    "coverage": it.coverage,
                    "lower": f"{it.lower:.6f}",
                    "upper": f"{it.upper:.6f}",
                    "ratio": f"{it.ratio:.6f}",
                    "stop_reason": it.stop,
                })
    return _write_csv(path, TRACE_COLUMNS, out)


def write_spread_csv(rows, path):
    """Final-spread distribution per policy (histogram form)."""
    counts = {}
    for r in rows:
        key = (r["policy"], r["final_spread"])
        counts[key] = counts.get(key, 0) + 1
    out = [{"policy": p, "final_spread": s, "count": c}
           for (p, s), c in sorted(counts.items())]
    return _write_csv(path, ["policy", "final_spread", "count"], out)


def write_size_hist_csv(reports, rows, path):
    """Aggregated sample-size histogram per policy."""
    agg = {}
    for meta, rep in zip(rows, reports):
        for rec in rep.rounds:
            for size, count in rec.outcome.size_hist.items():
                key = (meta["policy"], size)
                agg[key] = agg.get(key, 0) + count
    out = [{"policy": p, "set_size": s, "count": c} for (p, s), c in sorted(agg.items())]
    return _write_csv(path, ["policy", "set_size", "count"], out)


BENCH_SEED_COLUMNS = ["eta_raw", "eta", "eta_fraction", "policy", "runs",
                      "mean_seeds", "std_seeds", "mean_spread", "mean_samples"]
BENCH_TIME_COLUMNS = ["eta_raw", "eta", "eta_fraction", "policy", "runs",
                      "mean_wall_ms"]


def write_bench_seeds_csv(rows, path):
    """Seed-count curve data: aggregate row per (target, policy)."""
    return _write_csv(path, BENCH_SEED_COLUMNS,
                      [{k: r[k] for k in BENCH_SEED_COLUMNS} for r in rows])


def write_bench_times_csv(rows, path):
    """Wall-time curve data, split off so the seed CSV stays deterministic."""
    return _write_csv(path, BENCH_TIME_COLUMNS,
                      [{k: r[k] for k in BENCH_TIME_COLUMNS} for r in rows])


def write_id_map_csv(g, path):
    ids = range(g.n) if g.original_ids is None else g.original_ids
    out = [{"node": i, "original_id": int(orig)} for i, orig in enumerate(ids)]
    return _write_csv(path, ["node", "original_id"], out)


def write_manifest(path, config, files, failures):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "config": config,
        "files": sorted(str(f) for f in files),
        "failures": failures,
        "ok": not failures,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# -- figures -----------------------------------------------------------------

def _new_fig(width=6.0, height=3.6):
    fig, ax = plt.subplots(figsize=(width, height), dpi=150)
    ax.grid(True, alpha=0.3, linewidth=0.5)
    return fig, ax


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def fig_spread_distribution(rows, eta, path):
    """Grouped bars: final spread of every run, target line overlaid."""
    policies = sorted({r["policy"] for r in rows})
    fig, ax = _new_fig()
    width = 0.8 / max(1, len(policies))
    for i, policy in enumerate(policies):
        sub = sorted((r for r in rows if r["policy"] == policy),
                     key=lambda r: r["realization_id"])
        rids = [r["realization_id"] for r in sub]
        spreads = [r["final_spread"] for r in sub]
        ax.bar([x + i * width for x in rids], spreads, width=width, label=policy)
    ax.axhline(eta, color="black", linestyle="--", linewidth=1, label="target")
    ax.set_xlabel("realization")
    ax.set_ylabel("final spread")
    ax.legend(fontsize=8)
    return _save(fig, path)


def fig_seeds_vs_eta(bench_rows, path):
    return _fig_vs_eta(bench_rows, "mean_seeds", "mean seed count", path)


def fig_time_vs_eta(bench_rows, path):
    return _fig_vs_eta(bench_rows, "mean_wall_ms", "mean wall time (ms)", path, log=True)


def _fig_vs_eta(bench_rows, field, label, path, log=False):
    policies = sorted({r["policy"] for r in bench_rows})
    fig, ax = _new_fig()
    for policy in policies:
        sub = sorted((float(r["eta_fraction"]), float(r[field]))
                     for r in bench_rows if r["policy"] == policy)
        ax.plot([x for x, _ in sub], [y for _, y in sub], marker="o", label=policy)
    if log:
        ax.set_yscale("log")
    ax.set_xlabel("target fraction of nodes")
    ax.set_ylabel(label)
    ax.legend(fontsize=8)
    return _save(fig, path)
