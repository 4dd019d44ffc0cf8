"""Figure rendering for the CLI report paths.

Plots are written next to the delimited output. Headless backend only.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_METRIC_LABEL = {
    "cardinality": "scheduled users",
    "k_star_star": "satisfied users",
    "sum_power_w": "transmit power (W)",
    "max_il_w": "max leakage (W)",
    "mean_il_w": "mean leakage (W)",
}


def render_comparison(path: str | Path, rows: Sequence[Sequence[Any]]) -> None:
    """Grouped bars, analysis next to simulation for each algo/metric pair.

    Rows follow the comparison.csv layout: algo at index 3, metric at 4,
    analysis value at 5, simulation value at 6.
    """
    metrics = sorted({r[4] for r in rows})
    if not metrics:
        return
    fig, axes = plt.subplots(1, len(metrics), figsize=(4.0 * len(metrics), 3.2))
    if len(metrics) == 1:
        axes = [axes]
    for ax, metric in zip(axes, metrics):
        sel = [r for r in rows if r[4] == metric]
        algos = [r[3] for r in sel]
        ana = [float(r[5]) for r in sel]
        sim = [float(r[6]) for r in sel]
        x = range(len(algos))
        ax.bar([i - 0.18 for i in x], ana, width=0.36, label="analysis",
               color="#888888", hatch="//")
        ax.bar([i + 0.18 for i in x], sim, width=0.36, label="simulation",
               color="#336699")
        ax.set_xticks(list(x))
        ax.set_xticklabels(algos, rotation=20, ha="right", fontsize=8)
        ax.set_title(_METRIC_LABEL.get(metric, metric), fontsize=9)
        if metric.endswith("_w"):
            ax.set_yscale("log")
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_sweep(
    path: str | Path,
    rows: Sequence[dict[str, str]],
    axis: str,
) -> None:
    """One panel per metric, mean with stderr bars versus the swept value."""
    sim = [r for r in rows if r.get("source") == "simulation"]
    metrics = sorted({r["metric"] for r in sim})
    algos = sorted({r["algo"] for r in sim})
    if not metrics:
        return
    fig, axes = plt.subplots(1, len(metrics), figsize=(3.4 * len(metrics), 3.0))
    if len(metrics) == 1:
        axes = [axes]
    for ax, metric in zip(axes, metrics):
        for algo in algos:
            pts = sorted(
                (float(r["axis_value"]), float(r["mean"]), float(r["stderr"]))
                for r in sim
                if r["metric"] == metric and r["algo"] == algo
            )
            if not pts:
                continue
            xs = [p[0] for p in pts]
            ys = [p[1] for p in pts]
            es = [p[2] for p in pts]
            ax.errorbar(xs, ys, yerr=es, marker="o", markersize=3,
                        linewidth=1.0, capsize=2, label=algo)
        ax.set_xlabel(axis, fontsize=8)
        ax.set_title(_METRIC_LABEL.get(metric, metric), fontsize=9)
        if metric.endswith("_w"):
            ax.set_yscale("log")
    axes[-1].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
