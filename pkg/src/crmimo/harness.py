"""Monte Carlo harness: trials, campaigns, sweeps, and delimited output.

A trial is one channel realisation at one drop of node positions. Every
trial derives its own random substream from (seed, location, channel), so
campaigns aggregate identically for any execution order or worker count.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import channel as chan
from . import selection as sel
from .config import Geometry, NetworkConfig, default_margins, validate, watts_to_dbm
from .errors import ConfigError
from .selection import SelectionOutcome

log = logging.getLogger(__name__)

# Default desk-scale campaign size.
DEFAULT_LOCATIONS = 50
DEFAULT_CHANNELS = 200

TRIAL_COLUMNS = (
    "location_idx",
    "channel_idx",
    "algo",
    "cardinality",
    "k_star_star",
    "sum_power_w",
    "max_il_w",
    "mean_il_w",
    "iterations",
)

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

METRICS = ("cardinality", "k_star_star", "sum_power_w", "max_il_w", "mean_il_w", "iterations")

SWEEP_AXES = ("M", "I0", "R0-scale", "L", "K", "eps1-scale", "eps2-scale")


@dataclass
class AlgoMetrics:
    cardinality: int
    k_star_star: int
    sum_power_w: float
    max_il_w: float
    mean_il_w: float
    iterations: int

    def as_row(self) -> tuple:
        return (
            self.cardinality,
            self.k_star_star,
            self.sum_power_w,
            self.max_il_w,
            self.mean_il_w,
            self.iterations,
        )


@dataclass
class TrialRecord:
    location_index: int
    channel_index: int
    metrics: dict[str, AlgoMetrics] = field(default_factory=dict)


def _measure(
    outcome: SelectionOutcome,
    channels: chan.ChannelRealization,
    rev: np.ndarray,
    config: NetworkConfig,
    rates: np.ndarray | None,
) -> AlgoMetrics:
    report = sel.evaluate(channels, outcome, rev, config, rates=rates)
    il = report.pr_interference
    return AlgoMetrics(
        cardinality=len(outcome.members),
        k_star_star=report.satisfied_count,
        sum_power_w=report.sum_power,
        max_il_w=float(np.max(il)) if il.size else 0.0,
        mean_il_w=float(np.mean(il)) if il.size else 0.0,
        iterations=outcome.iterations,
    )


def run_trial(
    config: NetworkConfig,
    geometry: Geometry,
    location_index: int,
    channel_index: int,
    oracle: bool = False,
) -> TrialRecord:
    """One channel realisation: run every algorithm and score it.

    With `oracle` set, the exhaustive and sorted-prefix optima join the
    record when the instance is inside their size guards. Per-trial target
    rates are drawn here when the config requests uniform rates.
    """
    rng = chan.trial_rng(config.seed, location_index, channel_index)
    channels = chan.sample_channels(geometry, config, rng)
    csi = chan.corrupt_csi(channels, config, rng)
    rates = None
    if config.R0_uniform is not None:
        low, high = config.R0_uniform
        # Half-open draw from (low, high]: zero targets are never produced.
        rates = high - rng.uniform(0.0, high - low, size=config.K)

    rev = csi.rev_interference
    record = TrialRecord(location_index=location_index, channel_index=channel_index)
    outcomes = [
        sel.dmp(csi, config, update_vectors=True, rates=rates),
        sel.dmp(csi, config, update_vectors=False, rates=rates),
        sel.mdml(csi, config),
    ]
    if oracle:
        if config.K <= 14:
            outcomes.append(sel.exhaustive_optimal(csi, config, rates=rates))
        if config.K <= 20:
            outcomes.append(sel.sorted_prefix_optimal(csi, config, rates=rates))
    for outcome in outcomes:
        record.metrics[outcome.algorithm] = _measure(outcome, channels, rev, config, rates)
    return record


def _location_block(args: tuple) -> list[TrialRecord]:
    config, location_index, n_channels, oracle = args
    geometry = chan.sample_geometry(config, chan.geometry_rng(config.seed, location_index))
    return [
        run_trial(config, geometry, location_index, c, oracle=oracle)
        for c in range(n_channels)
    ]


@dataclass
class MetricStat:
    mean: float
    stderr: float
    n: int


@dataclass
class CampaignSummary:
    config: NetworkConfig
    n_locations: int
    n_channels: int
    stats: dict[str, dict[str, MetricStat]]  # algo -> metric -> stat

    @property
    def config_hash(self) -> str:
        return self.config.config_hash()


def summarize(config: NetworkConfig, records: Sequence[TrialRecord]) -> CampaignSummary:
    """Aggregate trial records into per-algorithm means and standard errors."""
    ordered = sorted(records, key=lambda r: (r.location_index, r.channel_index))
    algos = sorted({a for r in ordered for a in r.metrics})
    stats: dict[str, dict[str, MetricStat]] = {}
    for algo in algos:
        rows = np.asarray([r.metrics[algo].as_row() for r in ordered if algo in r.metrics])
        stats[algo] = {}
        for i, metric in enumerate(METRICS):
            col = rows[:, i]
            n = col.size
            se = float(np.std(col, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
            stats[algo][metric] = MetricStat(mean=float(np.mean(col)), stderr=se, n=n)
    locs = {r.location_index for r in ordered}
    chans = {r.channel_index for r in ordered}
    return CampaignSummary(
        config=config,
        n_locations=len(locs),
        n_channels=len(chans),
        stats=stats,
    )


def run_campaign(
    config: NetworkConfig,
    n_locations: int = DEFAULT_LOCATIONS,
    n_channels: int = DEFAULT_CHANNELS,
    jobs: int = 1,
    oracle: bool = False,
    progress: Callable[[int, int], None] | None = None,
) -> tuple[list[TrialRecord], CampaignSummary]:
    """Simulate a grid of locations times channel draws.

    Results are independent of `jobs`: substreams are keyed by indices and
    records are sorted before aggregation.
    """
    errs = validate(config)
    if errs:
        raise ConfigError("; ".join(errs))
    if oracle and config.K > 14:
        log.warning("exhaustive oracle disabled: K=%d exceeds the K<=14 guard", config.K)
    tasks = [(config, loc, n_channels, oracle) for loc in range(n_locations)]
    records: list[TrialRecord] = []
    if jobs <= 1:
        for i, task in enumerate(tasks):
            records.extend(_location_block(task))
            if progress:
                progress(i + 1, len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, block in enumerate(pool.map(_location_block, tasks)):
                records.extend(block)
                if progress:
                    progress(i + 1, len(tasks))
    return records, summarize(config, records)


@dataclass
class SweepPoint:
    axis: str
    value: float
    summary: CampaignSummary | None
    skipped: str | None = None


def derive_config(base: NetworkConfig, axis: str, value: float) -> NetworkConfig:
    """Config for one sweep point.

    Scale axes are relative: `R0-scale` multiplies the target rates and the
    margin scales multiply the CSI-matched default margins. Axes that do
    not touch K, L, or the cell leave the geometry stream unchanged.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    if axis == "M":
        return base.with_overrides(M=int(value))
    if axis == "I0":
        return base.with_overrides(I0=float(value))
    if axis == "L":
        return base.with_overrides(L=int(value))
    if axis == "K":
        cfg = base.with_overrides(K=int(value))
        if np.isscalar(base.R0) or np.asarray(base.R0).size != int(value):
            rates = np.asarray(base.R0, dtype=float)
            cfg = cfg.with_overrides(R0=float(rates.flat[0]))
        return cfg
    if axis == "R0-scale":
        cfg = base.with_overrides(R0=np.asarray(base.R0, dtype=float) * float(value))
        if base.R0_uniform is not None:
            low, high = base.R0_uniform
            cfg = cfg.with_overrides(R0_uniform=(low * float(value), high * float(value)))
        return cfg
    # Margin scales are relative to the CSI-matched defaults.
    d1, d2 = default_margins(base)
    if axis == "eps1-scale":
        return base.with_overrides(eps1=d1 * float(value))
    return base.with_overrides(eps2=d2 * float(value))


def sweep(
    base: NetworkConfig,
    axis: str,
    values: Sequence[float],
    n_locations: int = DEFAULT_LOCATIONS,
    n_channels: int = DEFAULT_CHANNELS,
    jobs: int = 1,
    oracle: bool = False,
) -> list[SweepPoint]:
    points: list[SweepPoint] = []
    for value in values:
        try:
            cfg = derive_config(base, axis, value)
            errs = validate(cfg)
            if errs:
                raise ConfigError("; ".join(errs))
        except ConfigError as exc:
            log.warning("skipping %s=%s: %s", axis, value, exc)
            points.append(SweepPoint(axis=axis, value=float(value), summary=None, skipped=str(exc)))
            continue
        _, summary = run_campaign(
            cfg, n_locations=n_locations, n_channels=n_channels, jobs=jobs, oracle=oracle
        )
        points.append(SweepPoint(axis=axis, value=float(value), summary=summary))
    return points


# -- delimited output ---------------------------------------------------------


def _fmt(x: Any) -> Any:
    if isinstance(x, float):
        return f"{x:.12g}"
    return x


def write_trials_csv(path: str | Path, records: Sequence[TrialRecord]) -> None:
    ordered = sorted(records, key=lambda r: (r.location_index, r.channel_index))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIAL_COLUMNS)
        for r in ordered:
            for algo in sorted(r.metrics):
                m = r.metrics[algo]
                writer.writerow(
                    [
                        r.location_index,
                        r.channel_index,
                        algo,
                        m.cardinality,
                        m.k_star_star,
                        _fmt(m.sum_power_w),
                        _fmt(m.max_il_w),
                        _fmt(m.mean_il_w),
                        m.iterations,
                    ]
                )


def summary_rows(
    summary: CampaignSummary,
    axis: str = "",
    axis_value: Any = "",
    source: str = "simulation",
) -> list[list[Any]]:
    rows = []
    for algo in sorted(summary.stats):
        for metric in METRICS:
            st = summary.stats[algo][metric]
            rows.append(
                [
                    summary.config_hash,
                    axis,
                    _fmt(axis_value) if axis_value != "" else "",
                    algo,
                    metric,
                    _fmt(st.mean),
                    _fmt(st.stderr),
                    st.n,
                    source,
                ]
            )
    return rows


def write_summary_csv(path: str | Path, rows: Sequence[Sequence[Any]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerows(rows)


def read_summary_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_config_echo(
    path: str | Path,
    config: NetworkConfig,
    run: dict[str, Any] | None = None,
) -> None:
    """JSON sidecar with everything needed to reproduce a run bit for bit."""
    eps1, eps2 = config.margins()
    payload = {
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "resolved": {
            "eps1": eps1,
            "eps2": eps2,
            "sigma_delta2": config.csi_error_su,
            "sigma_Delta2": config.csi_error_pr,
            "I0_dbm": watts_to_dbm(config.I0),
        },
        "run": run or {},
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
