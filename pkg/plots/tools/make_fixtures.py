"""Regenerate the fixture CSVs and golden PNGs for the plots test suite.

Needs the primary package's `crmimo` CLI on PATH and must run from a
checkout that has configs/ at the repository root:

    python3 plots/tools/make_fixtures.py

Fixtures are desk scale (2 locations x 25 channels) so the whole rebuild
finishes in a few minutes on one core. The optimality fixture also merges
closed-form rows (axis columns filled in per sweep point) to exercise the
dashed analysis overlay.
"""

from __future__ import annotations

import csv
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

PLOTS = Path(__file__).resolve().parents[1]
ROOT = PLOTS.parent
DATA = PLOTS / "tests" / "data"
GOLDEN = PLOTS / "tests" / "golden"

sys.path.insert(0, str(PLOTS / "src"))

from crmimo_plots.families import run_family  # noqa: E402

SCALE = ["--locations", "2", "--channels", "25"]

SWEEPS: dict[str, tuple[str, list[str]]] = {
    "optimality": (
        "optimality.json",
        ["--axis", "M", "--values", "32,64,128", "--oracle", "on"],
    ),
    "rate-impact": (
        "rate_impact.json",
        ["--axis", "R0-scale", "--values", "0.25,0.5,1"],
    ),
    "interference-impact": (
        "interference_impact.json",
        # Equals form: argparse reads a space-separated "-110,..." as a flag.
        ["--axis", "I0", "--dbm", "--values=-110,-106,-100"],
    ),
    "primary-pairs": (
        "primary_pairs.json",
        ["--axis", "L", "--values", "1,2,4"],
    ),
    "user-count": (
        "user_count.json",
        ["--axis", "K", "--values", "5,10,15,20"],
    ),
    "margins": (
        "margins.json",
        ["--axis", "eps2-scale", "--values", "0.25,0.5,1,2,4"],
    ),
}


def _run(cmd: list[str]) -> None:
    subprocess.run(cmd, check=True, cwd=ROOT)


def _analyze_overlay(cfg: str, axis: str, values: list[int], tmp: Path) -> list[list[str]]:
    rows: list[list[str]] = []
    for v in values:
        out = tmp / f"analyze_{axis}_{v}"
        _run([
            "crmimo", "analyze", "--config", f"configs/{cfg}",
            "--set", f"{axis}={v}", "--locations", "2", "--out", str(out),
        ])
        with open(out / "analysis.csv", newline="") as fh:
            reader = csv.reader(fh)
            next(reader)
            for rec in reader:
                rec[1], rec[2] = axis, str(v)
                rows.append(rec)
    return rows


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    GOLDEN.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as td:
        tmp = Path(td)
        for family, (cfg, extra) in SWEEPS.items():
            out = tmp / family
            _run(["crmimo", "sweep", "--config", f"configs/{cfg}", *extra, *SCALE,
                  "--out", str(out)])
            stem = family.replace("-", "_")
            dest = DATA / f"{stem}.csv"
            shutil.copyfile(out / "summary.csv", dest)
            if family == "optimality":
                overlay = _analyze_overlay(cfg, "M", [32, 64, 128], tmp)
                with open(dest, "a", newline="") as fh:
                    csv.writer(fh).writerows(overlay)
            rc = run_family(family, ["--csv", str(dest),
                                     "--out", str(GOLDEN / f"{stem}.png")])
            if rc != 0:
                raise SystemExit(rc)
            print(f"rebuilt {stem}: {dest.name} and golden/{stem}.png")
    print("fixtures and goldens regenerated")


if __name__ == "__main__":
    main()
