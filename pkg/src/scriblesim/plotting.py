"""Figure rendering for run and sweep artifacts.

Figures are rebuilt from the emitted CSV/JSON files, never from in-memory
state, so the plot subcommand can re-render any artifact directory and a
re-render is byte-identical: the SVG hash salt is pinned to the run id and
the date metadata is stripped.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import ConfigurationError


def _save_deterministic(fig, out_path: Path, salt: str):
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": salt, "svg.fonttype": "path"}):
        fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out_path


def render_run_plot(trajectory_csv: Path, out_svg: Path, annotation: str) -> Path:
    """Mean regret over rounds, one line per algorithm, from a trajectory CSV."""
    trajectory_csv = Path(trajectory_csv)
    if not trajectory_csv.exists():
        raise ConfigurationError(f"missing trajectory file {trajectory_csv}")
    sums: dict[str, dict[int, float]] = defaultdict(lambda: defaultdict(float))
    counts: dict[str, dict[int, int]] = defaultdict(lambda: defaultdict(int))
    with open(trajectory_csv, newline="") as fh:
        for row in csv.DictReader(fh):
            algo, t = row["algorithm"], int(row["t"])
            sums[algo][t] += float(row["regret"])
            counts[algo][t] += 1
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for algo in sorted(sums):
        ts = sorted(sums[algo])
        means = [sums[algo][t] / counts[algo][t] for t in ts]
        ax.plot(ts, means, label=algo)
    ax.set_xlabel("round t")
    ax.set_ylabel("mean regret")
    ax.legend()
    fig.text(0.01, 0.005, annotation, fontsize=6)
    fig.tight_layout()
    return _save_deterministic(fig, Path(out_svg), annotation)


def render_sweep_plot(table_csv: Path, out_svg: Path, annotation: str) -> Path:
    """Mean final regret vs epsilon, one marked line per algorithm."""
    table_csv = Path(table_csv)
    if not table_csv.exists():
        raise ConfigurationError(f"missing sweep table {table_csv}")
    series: dict[str, list[tuple[float, float]]] = defaultdict(list)
    with open(table_csv, newline="") as fh:
        for row in csv.DictReader(fh):
            series[row["algorithm"]].append(
                (float(row["epsilon"]), float(row["mean_final_regret"])))
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for algo in sorted(series):
        pts = sorted(series[algo])
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=algo)
    ax.set_xlabel("epsilon")
    ax.set_ylabel("mean final regret")
    ax.legend()
    fig.text(0.01, 0.005, annotation, fontsize=6)
    fig.tight_layout()
    return _save_deterministic(fig, Path(out_svg), annotation)
