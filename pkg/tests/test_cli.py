import os

import pytest

from far2.cli import main

SUITE = """
[suite]
format = csv

[solver]
name = FAR2-PK

[solver]
name = AR2

[problem]
name = QUAD
n = 6

[problem]
name = ROSENBR
n = 2
"""


def test_list_prints_registry(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert "ROSENBR" in out and "QUAD" in out


def test_run_then_profile(tmp_path, capsys):
    cfg = tmp_path / "suite.cfg"
    cfg.write_text(SUITE)
    out = tmp_path / "results"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "reports.csv").exists()
    assert (out / "reports.json").exists()
    capsys.readouterr()
    assert main(["profile", "--out", str(out), "--metric", "fact"]) == 0
    text = capsys.readouterr().out
    assert "FAR2-PK" in text
    dat = [f for f in os.listdir(out) if f.endswith(".dat")]
    assert len(dat) == 2


def test_run_requires_config(capsys):
    assert main(["run"]) == 2


def test_profile_without_reports(tmp_path):
    assert main(["profile", "--out", str(tmp_path)]) == 2


@pytest.mark.slow
def test_check_self_test():
    assert main(["check"]) == 0
