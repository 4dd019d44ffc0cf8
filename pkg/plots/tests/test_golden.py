"""Byte-for-byte golden comparison of every family's deterministic render.

Regenerate after an intentional visual change with
`python3 plots/tools/make_fixtures.py` (needs the simulator CLI).
"""

from pathlib import Path

import pytest

from crmimo_plots.families import FAMILIES, run_family

HERE = Path(__file__).parent
DATA = HERE / "data"
GOLDEN = HERE / "golden"


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_render_matches_golden(family, tmp_path):
    stem = family.replace("-", "_")
    csv_path = DATA / f"{stem}.csv"
    golden_path = GOLDEN / f"{stem}.png"
    assert csv_path.exists(), f"fixture missing: {csv_path}"
    assert golden_path.exists(), f"golden missing: {golden_path}"
    out = tmp_path / f"{stem}.png"
    assert run_family(family, ["--csv", str(csv_path), "--out", str(out)]) == 0
    got = out.read_bytes()
    want = golden_path.read_bytes()
    assert got == want, f"{family}: render differs from {golden_path.name}"


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_cli_rejects_missing_csv(family, tmp_path, capsys):
    rc = run_family(family, ["--csv", str(tmp_path / "absent.csv"),
                             "--out", str(tmp_path / "x.png")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_cli_requires_flags():
    with pytest.raises(SystemExit) as exc:
        run_family("margins", [])
    assert exc.value.code == 2
