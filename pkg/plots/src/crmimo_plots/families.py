"""The six figure families and their command-line entry points.

Each family reads a sweep summary CSV (--csv) and writes one PNG (--out).
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .figure import FamilySpec, render, save_png
from .reader import SchemaError, read_summary, series_for

FAMILIES: dict[str, FamilySpec] = {
    "optimality": FamilySpec(
        name="optimality",
        axis="M",
        metric="cardinality",
        xlabel="transmit antennas M",
        ylabel="scheduled users",
        title="Greedy selection against the optimum",
    ),
    "rate-impact": FamilySpec(
        name="rate-impact",
        axis="R0-scale",
        metric="k_star_star",
        xlabel="target-rate scale",
        ylabel="rate-satisfied users",
        title="Served users as targets grow",
    ),
    "interference-impact": FamilySpec(
        name="interference-impact",
        axis="I0",
        metric="k_star_star",
        xlabel="interference threshold (dBm)",
        ylabel="rate-satisfied users",
        title="Served users against the protection threshold",
        x_dbm=True,
    ),
    "primary-pairs": FamilySpec(
        name="primary-pairs",
        axis="L",
        metric="k_star_star",
        xlabel="primary pairs L",
        ylabel="rate-satisfied users",
        title="Served users against the number of primary pairs",
    ),
    "user-count": FamilySpec(
        name="user-count",
        axis="K",
        metric="k_star_star",
        xlabel="candidate users K",
        ylabel="rate-satisfied users",
        title="Served users against the candidate pool",
    ),
    "margins": FamilySpec(
        name="margins",
        axis="eps2-scale",
        metric="k_star_star",
        xlabel="rate margin relative to the matched value",
        ylabel="rate-satisfied users",
        title="Rate margin around the matched setting",
        log2_x=True,
        marker_x=1.0,
        marker_label="matched margin",
    ),
}


def run_family(family: str, argv: Sequence[str] | None = None) -> int:
    spec = FAMILIES[family]
    parser = argparse.ArgumentParser(
        prog=f"crmimo-plot-{family}",
        description=f"Render the {family} figure from a sweep summary CSV",
    )
    parser.add_argument("--csv", required=True, help="summary.csv from a sweep run")
    parser.add_argument("--out", required=True, help="output PNG path")
    args = parser.parse_args(argv)
    try:
        rows = read_summary(args.csv)
        series = series_for(rows, spec.axis, spec.metric)
        fig = render(spec, series)
    except (OSError, SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    save_png(fig, args.out)
    print(f"wrote {args.out}")
    return 0


def main_optimality(argv: Sequence[str] | None = None) -> int:
    return run_family("optimality", argv)


def main_rate_impact(argv: Sequence[str] | None = None) -> int:
    return run_family("rate-impact", argv)


def main_interference_impact(argv: Sequence[str] | None = None) -> int:
    return run_family("interference-impact", argv)


def main_primary_pairs(argv: Sequence[str] | None = None) -> int:
    return run_family("primary-pairs", argv)


def main_user_count(argv: Sequence[str] | None = None) -> int:
    return run_family("user-count", argv)


def main_margins(argv: Sequence[str] | None = None) -> int:
    return run_family("margins", argv)
