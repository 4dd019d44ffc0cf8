"""Deterministic matplotlib rendering shared by every figure family."""

from __future__ import annotations

import math
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")  # file output only; keeps renders byte-stable

import matplotlib.pyplot as plt
from matplotlib.figure import Figure
from matplotlib.ticker import ScalarFormatter

from .reader import SOURCE_ANALYSIS, SOURCE_SIMULATION, SchemaError, Series

# Fixed per-algorithm colors so overlays pair up visually across sources.
_ALGO_COLORS = {
    "dmp": "C0",
    "dmp_noupdate": "C1",
    "mdml": "C2",
    "optimal": "C3",
    "sorted_prefix": "C4",
}
_EXTRA_COLORS = ("C5", "C6", "C7", "C8", "C9")

_ALGO_LABELS = {
    "dmp": "drop max power",
    "dmp_noupdate": "drop max power (frozen beams)",
    "mdml": "drop min gain",
    "optimal": "exhaustive optimum",
    "sorted_prefix": "sorted-prefix optimum",
}


def watts_to_dbm(watts: float) -> float:
    if watts <= 0.0:
        raise ValueError(f"power must be positive to convert to dBm, got {watts!r}")
    return 10.0 * math.log10(watts) + 30.0


@dataclass(frozen=True)
class FamilySpec:
    """Declarative description of one figure family."""

    name: str
    axis: str
    metric: str
    xlabel: str
    ylabel: str
    title: str
    x_dbm: bool = False
    log2_x: bool = False
    marker_x: float | None = None
    marker_label: str = ""


def _color(algo: str, fallback: dict[str, str]) -> str:
    if algo in _ALGO_COLORS:
        return _ALGO_COLORS[algo]
    if algo not in fallback:
        fallback[algo] = _EXTRA_COLORS[len(fallback) % len(_EXTRA_COLORS)]
    return fallback[algo]


def render(spec: FamilySpec, series: list[Series]) -> Figure:
    """Render one family figure.

    Simulation series are solid with error bars; analysis series overlay
    them dashed, in the color of the matching algorithm.
    """
    if not series:
        raise SchemaError(f"no rows for axis={spec.axis!r} metric={spec.metric!r}")
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=110)
    fallback: dict[str, str] = {}
    ordered = sorted(series, key=lambda s: (s.source != SOURCE_SIMULATION, s.algo))
    for s in ordered:
        x = [watts_to_dbm(v) for v in s.x] if spec.x_dbm else list(s.x)
        color = _color(s.algo, fallback)
        label = _ALGO_LABELS.get(s.algo, s.algo)
        if s.source == SOURCE_SIMULATION:
            ax.errorbar(
                x,
                s.y,
                yerr=s.err,
                color=color,
                linestyle="-",
                marker="o",
                markersize=4,
                capsize=3,
                linewidth=1.4,
                label=label,
            )
        elif s.source == SOURCE_ANALYSIS:
            ax.plot(
                x,
                s.y,
                color=color,
                linestyle="--",
                marker="s",
                markersize=4,
                markerfacecolor="none",
                linewidth=1.4,
                label=f"{label} (closed form)",
            )
    if spec.log2_x:
        ax.set_xscale("log", base=2)
        ax.xaxis.set_major_formatter(ScalarFormatter())
    if spec.marker_x is not None:
        ax.axvline(spec.marker_x, color="0.35", linestyle=":", linewidth=1.2)
        if spec.marker_label:
            ax.annotate(
                spec.marker_label,
                xy=(spec.marker_x, 0.02),
                xycoords=("data", "axes fraction"),
                rotation=90,
                fontsize=8,
                color="0.35",
                ha="right",
                va="bottom",
            )
    ax.set_xlabel(spec.xlabel)
    ax.set_ylabel(spec.ylabel)
    ax.set_title(spec.title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def save_png(fig: Figure, out: str) -> None:
    # Dropping the Software chunk keeps the bytes identical across
    # matplotlib patch releases.
    fig.savefig(out, format="png", metadata={"Software": None})
    plt.close(fig)
