from __future__ import annotations

import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from geoctx.cli import main, render_json, run

GOLDEN = Path(__file__).parent / "golden"

# (golden name, argv, expected exit code)
CASES = [
    ("validate_int", ["validate-context", "int.geo"], 0),
    ("validate_pt", ["validate-context", "pt.geo"], 0),
    ("validate_neg_gc1", ["validate-context", "neg_gc1.geo"], 1),
    ("validate_neg_gc2", ["validate-context", "neg_gc2.geo"], 1),
    ("validate_neg_gc3", ["validate-context", "neg_gc3.geo"], 1),
    ("validate_neg_gc4", ["validate-context", "neg_gc4.geo"], 1),
    ("validate_neg_gc5", ["validate-context", "neg_gc5.geo"], 1),
    ("validate_neg_gc6", ["validate-context", "neg_gc6.geo"], 1),
    ("sheafify_fold", ["sheafify", "fold.geo", "F"], 0),
    ("check_sheaf_hl", ["check-sheaf", "int.geo", "hL"], 0),
    ("check_epi_fold", ["check-epi", "fold.geo", "fold"], 0),
    ("check_mono_fold", ["check-mono", "fold.geo", "fold"], 1),
    ("open_immersion_fold", ["check-open-immersion", "fold.geo"], 1),
    ("open_immersion_inc", ["check-open-immersion", "int.geo", "inc"], 0),
    ("p_morphism_inc", ["check-p-morphism", "int.geo", "inc"], 0),
    ("schematic_inc", ["check-schematic", "int.geo", "inc"], 0),
    ("is_scheme_pc", ["is-scheme", "pc.geo", "--witnesses"], 0),
    ("glue_pc", ["glue", "pc.geo"], 0),
    ("decompose_pc", ["decompose", "pc.geo"], 0),
    ("fibre_product_inc", ["fibre-product", "int.geo", "inc"], 0),
    ("budget", ["is-scheme", "int.geo", "hL", "--budget", "1"], 2),
]


def output(argv) -> tuple[str, int]:
    report, code = run(argv)
    return render_json(report), code


def regenerate() -> None:
    GOLDEN.mkdir(exist_ok=True)
    for name, argv, _ in CASES:
        (GOLDEN / f"{name}.json").write_text(output(argv)[0], encoding="utf-8")


@pytest.mark.parametrize("name,argv,code", CASES, ids=[c[0] for c in CASES])
def test_golden(name, argv, code):
    text, got = output(argv)
    assert got == code
    assert text == (GOLDEN / f"{name}.json").read_text(encoding="utf-8")
    assert output(argv)[0] == text


def test_report_schema():
    report, _ = run(["validate-context", "neg_gc4.geo"])
    assert set(report) >= {"schema", "command", "verdicts", "witnesses", "result", "error", "elapsed_ms"}
    assert report["elapsed_ms"] is None
    failing = [v["check"] for v in report["verdicts"] if v["status"] == "fail"]
    assert failing == ["GC4"]
    assert report["witnesses"] == [{"check": "GC4", "witness": {"arrow": "i_XY_L", "covering": ["i_X_XY", "i_Y_XY"]}}]


def test_timing_is_opt_in():
    report, _ = run(["validate-context", "pt.geo", "--timing"])
    assert isinstance(report["elapsed_ms"], (int, float))


def test_missing_file_exits_3(capsys):
    assert main(["validate-context", "nowhere.geo"]) == 3
    assert json.loads(capsys.readouterr().out)["error"]["type"] == "FileNotFoundError"


def test_syntax_error_location(tmp_path, capsys):
    f = tmp_path / "bad.geo"
    f.write_text("object A\narrow f: A -> B\n")
    assert main(["validate-context", str(f)]) == 3
    err = json.loads(capsys.readouterr().out)["error"]
    assert (err["type"], err["line"], err["col"]) == ("UnknownIdentifier", 2, 1)


def test_text_format(capsys):
    assert main(["validate-context", "neg_gc4.geo", "--format", "text"]) == 1
    out = capsys.readouterr().out
    assert "GC4" in out and "fail" in out


def test_console_entry_point_is_deterministic():
    cmd = [sys.executable, "-m", "geoctx.cli", "is-scheme", "pc.geo", "--witnesses"]
    env = dict(os.environ, PYTHONHASHSEED="random")
    runs = [subprocess.run(cmd, capture_output=True, env=env, check=False) for _ in range(2)]
    assert runs[0].returncode == 0
    assert runs[0].stdout == runs[1].stdout == (GOLDEN / "is_scheme_pc.json").read_bytes()


if __name__ == "__main__":
    regenerate()
