"""Reading and grouping of campaign summary CSVs."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

SUMMARY_COLUMNS = (
    "config_hash",
    "axis",
    "axis_value",
    "algo",
    "metric",
    "mean",
    "stderr",
    "n",
    "source",
)

SOURCE_SIMULATION = "simulation"
SOURCE_ANALYSIS = "analysis"


class SchemaError(ValueError):
    """The CSV does not follow the summary schema."""


@dataclass(frozen=True)
class SummaryRow:
    config_hash: str
    axis: str
    axis_value: float | None
    algo: str
    metric: str
    mean: float
    stderr: float
    n: int
    source: str


def _parse_float(text: str, line: int, column: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise SchemaError(f"line {line}: column {column!r} is not a number: {text!r}") from exc


def read_summary(path: str | Path) -> list[SummaryRow]:
    """Parse a summary CSV, failing loudly on any schema drift."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file")
        if tuple(h.strip() for h in header) != SUMMARY_COLUMNS:
            raise SchemaError(
                f"{path}: header {header!r} does not match {list(SUMMARY_COLUMNS)}"
            )
        rows: list[SummaryRow] = []
        for line, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(SUMMARY_COLUMNS):
                raise SchemaError(f"{path} line {line}: expected {len(SUMMARY_COLUMNS)} fields")
            axis = rec[1].strip()
            raw_value = rec[2].strip()
            if (axis == "") != (raw_value == ""):
                raise SchemaError(f"{path} line {line}: axis and axis_value must pair up")
            source = rec[8].strip()
            if source not in (SOURCE_SIMULATION, SOURCE_ANALYSIS):
                raise SchemaError(f"{path} line {line}: unknown source {source!r}")
            try:
                n = int(rec[7])
            except ValueError as exc:
                raise SchemaError(f"{path} line {line}: column 'n' is not an integer") from exc
            rows.append(
                SummaryRow(
                    config_hash=rec[0].strip(),
                    axis=axis,
                    axis_value=None if raw_value == "" else _parse_float(raw_value, line, "axis_value"),
                    algo=rec[3].strip(),
                    metric=rec[4].strip(),
                    mean=_parse_float(rec[5], line, "mean"),
                    stderr=_parse_float(rec[6], line, "stderr"),
                    n=n,
                    source=source,
                )
            )
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


@dataclass(frozen=True)
class Series:
    """One plottable line: an (algo, source) pair along a sweep axis."""

    algo: str
    source: str
    x: tuple[float, ...]
    y: tuple[float, ...]
    err: tuple[float, ...]


def series_for(rows: Sequence[SummaryRow], axis: str, metric: str) -> list[Series]:
    """Group rows of one axis/metric into per-(algo, source) series.

    Points come out sorted by axis value; duplicate points are rejected
    because they would silently hide a concatenation mistake.
    """
    groups: dict[tuple[str, str], dict[float, SummaryRow]] = {}
    for row in rows:
        if row.axis != axis or row.metric != metric or row.axis_value is None:
            continue
        key = (row.algo, row.source)
        points = groups.setdefault(key, {})
        if row.axis_value in points:
            raise SchemaError(
                f"duplicate point: axis={axis} value={row.axis_value:g} "
                f"algo={row.algo} source={row.source}"
            )
        points[row.axis_value] = row
    series = []
    for (algo, source) in sorted(groups):
        points = groups[(algo, source)]
        xs = tuple(sorted(points))
        series.append(
            Series(
                algo=algo,
                source=source,
                x=xs,
                y=tuple(points[x].mean for x in xs),
                err=tuple(points[x].stderr for x in xs),
            )
        )
    return series
