"""Command line front end.

Verbs: simulate, analyze, compare, sweep, oracle, validate. Exit codes:
0 success, 1 a comparison or oracle gate failed, 2 usage or configuration
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import analysis, harness, report
from . import channel as chan
from .config import (
    NetworkConfig,
    apply_overrides,
    dbm_to_watts,
    load_config,
    validate,
)
from .errors import ConfigError, GuardError, NumericError, RankDeficientError

log = logging.getLogger("crmimo")

EXIT_OK = 0
EXIT_GATE = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

# Comparison bands between closed-form and simulated metrics.
COMPARE_BAND_USERS = 0.3      # absolute, scheduled or satisfied users
COMPARE_BAND_IL_REL = 0.10    # relative, mean leakage power

_ANALYSIS_METRICS = ("cardinality", "k_star_star", "mean_il_w")
_ANALYSIS_ALGOS = {"dmp": analysis.MODE_UPDATE, "dmp_noupdate": analysis.MODE_NOUPDATE}


def _add_common(p: argparse.ArgumentParser, out_default: str | None = "out") -> None:
    p.add_argument("--config", required=True, help="JSON config path")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable; _dbm suffix allowed)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    if out_default is not None:
        p.add_argument("--out", default=out_default, help="output directory")
        p.add_argument("--force", action="store_true",
                       help="allow overwriting existing output files")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--locations", type=int, default=harness.DEFAULT_LOCATIONS)
    p.add_argument("--channels", type=int, default=harness.DEFAULT_CHANNELS)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="crmimo",
        description="Simulator and analysis toolkit for QoS-aware user selection "
        "in an underlay massive-MIMO small cell",
    )
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("validate", help="check a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")

    p = sub.add_parser("simulate", help="run a Monte Carlo campaign")
    _add_common(p)
    p.add_argument("--oracle", choices=("on", "off"), default="off",
                   help="include exhaustive and sorted-prefix optima")

    p = sub.add_parser("analyze", help="closed-form predictions (K <= 10)")
    _add_common(p)

    p = sub.add_parser("compare", help="analysis vs simulation deviation report")
    _add_common(p)
    p.add_argument("--sim-dir", default=None,
                   help="reuse summary.csv/config-echo.json from this directory")

    p = sub.add_parser("sweep", help="campaigns along one axis")
    _add_common(p)
    p.add_argument("--axis", required=True, choices=harness.SWEEP_AXES)
    p.add_argument("--values", required=True,
                   help="comma-separated axis values; for negative lists "
                        "use the equals form, e.g. --values=-110,-106")
    p.add_argument("--dbm", action="store_true",
                   help="interpret the values as dBm (power axes)")
    p.add_argument("--oracle", choices=("on", "off"), default="off")

    p = sub.add_parser("oracle", help="verify greedy outcomes against the optima")
    _add_common(p)
    return ap


def _load(args: argparse.Namespace) -> NetworkConfig:
    config = load_config(args.config)
    if args.set:
        config = apply_overrides(config, args.set)
    if getattr(args, "seed", None) is not None:
        config = config.with_overrides(seed=int(args.seed))
    errs = validate(config)
    if errs:
        raise ConfigError("; ".join(errs))
    return config


def _prepare_out(args: argparse.Namespace, names: Sequence[str]) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if not args.force:
        clashes = [n for n in names if (out / n).exists()]
        if clashes:
            raise ConfigError(
                f"refusing to overwrite {', '.join(clashes)} in {out}; pass --force"
            )
    return out


def _echo_run(args: argparse.Namespace, extra: dict[str, Any] | None = None) -> dict[str, Any]:
    run = {
        "verb": args.verb,
        "locations": getattr(args, "locations", None),
        "channels": getattr(args, "channels", None),
    }
    if extra:
        run.update(extra)
    return run


def _progress(done: int, total: int) -> None:
    if done == total or done % 10 == 0:
        print(f"  locations {done}/{total}", file=sys.stderr)


def cmd_validate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.set:
        config = apply_overrides(config, args.set)
    errs = validate(config)
    if errs:
        for e in errs:
            print(f"invalid: {e}")
        return EXIT_USAGE
    print(f"ok: config hash {config.config_hash()}")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _load(args)
    out = _prepare_out(args, ["trials.csv", "summary.csv", "config-echo.json"])
    records, summary = harness.run_campaign(
        config,
        n_locations=args.locations,
        n_channels=args.channels,
        jobs=args.jobs,
        oracle=args.oracle == "on",
        progress=_progress,
    )
    harness.write_trials_csv(out / "trials.csv", records)
    harness.write_summary_csv(out / "summary.csv", harness.summary_rows(summary))
    harness.write_config_echo(out / "config-echo.json", config, _echo_run(args))
    for algo in sorted(summary.stats):
        st = summary.stats[algo]
        print(
            f"{algo:>14}: K*={st['cardinality'].mean:.3f} "
            f"K**={st['k_star_star'].mean:.3f} "
            f"mean_il={st['mean_il_w'].mean:.3e} W"
        )
    print(f"wrote {out}/trials.csv, summary.csv, config-echo.json")
    return EXIT_OK


def _analysis_rows(
    config: NetworkConfig, n_locations: int
) -> tuple[list[list[Any]], dict[tuple[str, str], float]]:
    """Closed-form metrics averaged over the same geometry stream as simulate."""
    if config.K > 10:
        raise GuardError(
            f"closed-form analysis is limited to K <= 10 users (got K={config.K}); "
            "run simulate instead"
        )
    per_mode: dict[str, dict[str, list[float]]] = {
        a: {m: [] for m in _ANALYSIS_METRICS} for a in _ANALYSIS_ALGOS
    }
    for loc in range(n_locations):
        geometry = chan.sample_geometry(config, chan.geometry_rng(config.seed, loc))
        for algo, mode in _ANALYSIS_ALGOS.items():
            model = analysis.SelectionChainAnalysis(config, geometry, mode)
            per_mode[algo]["cardinality"].append(model.expected_selected())
            per_mode[algo]["k_star_star"].append(model.expected_satisfied())
            per_mode[algo]["mean_il_w"].append(model.expected_interference())
    rows: list[list[Any]] = []
    means: dict[tuple[str, str], float] = {}
    h = config.config_hash()
    for algo, metrics in per_mode.items():
        for metric, vals in metrics.items():
            arr = np.asarray(vals)
            mean = float(np.mean(arr))
            se = float(np.std(arr, ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
            means[(algo, metric)] = mean
            rows.append([h, "", "", algo, metric, f"{mean:.12g}", f"{se:.12g}",
                         arr.size, "analysis"])
    return rows, means


def cmd_analyze(args: argparse.Namespace) -> int:
    config = _load(args)
    out = _prepare_out(args, ["analysis.csv", "config-echo.json"])
    rows, means = _analysis_rows(config, args.locations)
    harness.write_summary_csv(out / "analysis.csv", rows)
    harness.write_config_echo(out / "config-echo.json", config, _echo_run(args))
    for (algo, metric), v in sorted(means.items()):
        print(f"{algo:>14} {metric:<12} {v:.6g}")
    print(f"wrote {out}/analysis.csv")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    config = _load(args)
    out = _prepare_out(args, ["comparison.csv", "comparison.png", "config-echo.json"])
    if args.sim_dir:
        sim_dir = Path(args.sim_dir)
        echo = json.loads((sim_dir / "config-echo.json").read_text())
        if echo.get("config_hash") != config.config_hash():
            raise ConfigError(
                "simulation in --sim-dir was produced by a different config "
                f"(hash {echo.get('config_hash')} vs {config.config_hash()})"
            )
        sim_rows = harness.read_summary_csv(sim_dir / "summary.csv")
        sim_means = {
            (r["algo"], r["metric"]): float(r["mean"])
            for r in sim_rows
            if r["source"] == "simulation"
        }
    else:
        _, summary = harness.run_campaign(
            config,
            n_locations=args.locations,
            n_channels=args.channels,
            jobs=args.jobs,
            progress=_progress,
        )
        sim_means = {
            (algo, metric): summary.stats[algo][metric].mean
            for algo in summary.stats
            for metric in harness.METRICS
        }
    rows, ana_means = _analysis_rows(config, args.locations)

    report_rows: list[list[Any]] = []
    failures: list[str] = []
    for (algo, metric), ana in sorted(ana_means.items()):
        if (algo, metric) not in sim_means:
            continue
        simv = sim_means[(algo, metric)]
        dev = abs(ana - simv)
        if metric == "mean_il_w":
            band = COMPARE_BAND_IL_REL * max(abs(simv), 1e-300)
            ok = dev <= band
            band_text = f"{COMPARE_BAND_IL_REL:.0%} rel"
        else:
            band = COMPARE_BAND_USERS
            ok = dev <= band
            band_text = f"{COMPARE_BAND_USERS} abs"
        report_rows.append(
            [config.config_hash(), "", "", algo, metric,
             f"{ana:.12g}", f"{simv:.12g}", f"{dev:.12g}", band_text,
             "ok" if ok else "breach"]
        )
        status = "ok" if ok else "BREACH"
        print(f"{algo:>14} {metric:<12} analysis={ana:.6g} simulation={simv:.6g} "
              f"|dev|={dev:.3g} [{status}]")
        if not ok:
            failures.append(f"{algo}/{metric}")
    with open(out / "comparison.csv", "w", newline="") as fh:
        import csv as _csv

        w = _csv.writer(fh)
        w.writerow(["config_hash", "axis", "axis_value", "algo", "metric",
                    "analysis", "simulation", "abs_deviation", "band", "status"])
        w.writerows(report_rows)
    report.render_comparison(out / "comparison.png", report_rows)
    harness.write_config_echo(out / "config-echo.json", config, _echo_run(args))
    if failures:
        print(f"deviation bands breached: {', '.join(failures)}")
        return EXIT_GATE
    print("all deviations within bands")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _load(args)
    out = _prepare_out(args, ["summary.csv", "sweep.png", "config-echo.json"])
    try:
        values = [float(v) for v in args.values.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"cannot parse --values: {exc}") from exc
    if not values:
        raise ConfigError("--values must list at least one number")
    if args.dbm:
        if args.axis != "I0":
            raise ConfigError("--dbm only applies to the I0 axis")
        values = [dbm_to_watts(v) for v in values]
    points = harness.sweep(
        config,
        args.axis,
        values,
        n_locations=args.locations,
        n_channels=args.channels,
        jobs=args.jobs,
        oracle=args.oracle == "on",
    )
    rows: list[list[Any]] = []
    for pt in points:
        if pt.summary is None:
            print(f"{args.axis}={pt.value:g}: skipped ({pt.skipped})")
            continue
        rows.extend(harness.summary_rows(pt.summary, axis=pt.axis, axis_value=pt.value))
        st = pt.summary.stats
        line = ", ".join(
            f"{algo} K*={st[algo]['cardinality'].mean:.2f}" for algo in sorted(st)
        )
        print(f"{args.axis}={pt.value:g}: {line}")
    harness.write_summary_csv(out / "summary.csv", rows)
    header = harness.SUMMARY_COLUMNS
    report.render_sweep(
        out / "sweep.png",
        [dict(zip(header, (str(v) for v in row))) for row in rows],
        args.axis,
    )
    harness.write_config_echo(
        out / "config-echo.json", config,
        _echo_run(args, {"axis": args.axis, "values": values}),
    )
    print(f"wrote {out}/summary.csv and sweep.png")
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    config = _load(args)
    if config.K > 14:
        raise GuardError(
            f"oracle verification needs K <= 14 for the exhaustive search "
            f"(got K={config.K})"
        )
    out = _prepare_out(args, ["trials.csv", "config-echo.json"])
    records, _ = harness.run_campaign(
        config,
        n_locations=args.locations,
        n_channels=args.channels,
        jobs=args.jobs,
        oracle=True,
        progress=_progress,
    )
    harness.write_trials_csv(out / "trials.csv", records)
    harness.write_config_echo(out / "config-echo.json", config, _echo_run(args))
    ordering = 0
    prefix_mismatch = 0
    for r in records:
        c_opt = r.metrics["optimal"].cardinality
        c_dmp = r.metrics["dmp"].cardinality
        c_fix = r.metrics["dmp_noupdate"].cardinality
        c_prefix = r.metrics["sorted_prefix"].cardinality
        if not (c_fix <= c_dmp <= c_opt):
            ordering += 1
        if c_fix != c_prefix:
            prefix_mismatch += 1
    n = len(records)
    print(f"{n} trials: ordering violations {ordering}, prefix mismatches {prefix_mismatch}")
    return EXIT_OK if ordering == 0 and prefix_mismatch == 0 else EXIT_GATE


_COMMANDS = {
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "oracle": cmd_oracle,
}


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return _COMMANDS[args.verb](args)
    except (ConfigError, GuardError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, RankDeficientError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
