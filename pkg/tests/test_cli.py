import csv
import re
import subprocess
import sys

import pytest

from osr.distinguisher import default_threshold
from osr.harness.cli import main


def osr(*args):
    return subprocess.run([sys.executable, "-m", "osr", *map(str, args)], capture_output=True, text=True)


@pytest.fixture
def planted_file(tmp_path):
    path = tmp_path / "inst.txt"
    assert main(["gen-instance", "--kind", "planted", "--m", "4", "--k", "2", "--extra", "4",
                 "--seed", "7", "--out", str(path)]) == 0
    return path


def test_gen_and_verify_roundtrip(tmp_path):
    path = tmp_path / "inst.txt"
    r = osr("gen-instance", "--kind", "planted", "--m", 4, "--k", 2, "--extra", 4, "--seed", 7, "--out", path)
    assert r.returncode == 0, r.stderr
    r = osr("verify-instance", path, "--exact-cover")
    assert r.returncode == 0 and "yes" in r.stdout


def test_verify_no_cover_fails_on_planted(planted_file, capsys):
    assert main(["verify-instance", str(planted_file), "--no-cover", "--kprime", "2"]) == 1


def test_uncoverable_roundtrip(tmp_path):
    path = tmp_path / "u.txt"
    assert main(["gen-instance", "--kind", "uncoverable", "--m", "4", "--d", "6", "--kprime", "4",
                 "--seed", "1", "--out", str(path)]) == 0
    assert main(["verify-instance", str(path), "--no-cover", "--kprime", "4"]) == 0


def test_regret_row_count(tmp_path):
    out = tmp_path / "run.csv"
    r = osr("regret", "--d", 6, "--k", 2, "--kprime", 4, "--T", 1000, "--stream", "stochastic",
            "--seed", 1, "--out", out)
    assert r.returncode == 0, r.stderr
    with open(out) as fh:
        assert len(list(csv.reader(fh))) == 1001
    assert (tmp_path / "run.summary.csv").exists()


def test_distinguish_verdict_matches_threshold(planted_file, capsys):
    assert main(["distinguish", "--instance", str(planted_file), "--T", "5000", "--seed", "3"]) == 0
    line = capsys.readouterr().out.strip()
    m = re.fullmatch(r"verdict: (\w+) total_loss=(\S+) threshold=(\S+)", line)
    assert m
    loss, thr = float(m.group(2)), float(m.group(3))
    assert thr == pytest.approx(default_threshold(5000, 4, 6, 2), rel=1e-5)
    assert m.group(1) == ("satisfiable" if loss <= thr else "unsatisfiable")


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("d = 5\nk = 1\nkprime = 3\nT = 50  # short\nseed = 2\n")
    out = tmp_path / "c.csv"
    assert main(["regret", "--config", str(cfg), "--T", "40", "--out", str(out)]) == 0
    with open(out) as fh:
        assert len(list(csv.reader(fh))) == 41
    assert "seed=2" in capsys.readouterr().out


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("dimension = 5\n")
    assert main(["regret", "--config", str(cfg)]) == 1
    assert "unknown key" in capsys.readouterr().err


def test_missing_required_flag():
    r = osr("regret", "--d", 6, "--k", 2)
    assert r.returncode == 2 and "--kprime" in r.stderr


def test_invalid_parameters_exit_one(tmp_path):
    r = osr("regret", "--d", 6, "--k", 2, "--kprime", 3, "--T", 10, "--out", tmp_path / "x.csv")
    assert r.returncode == 1 and "error" in r.stderr


def test_repeat_writes_per_seed_files(tmp_path, capsys):
    out = tmp_path / "rep.csv"
    assert main(["regret", "--d", "5", "--k", "1", "--kprime", "3", "--T", "30", "--repeat", "3",
                 "--out", str(out)]) == 0
    for s in range(3):
        assert (tmp_path / f"rep_s{s}.csv").exists()
    assert "over 3 seeds" in capsys.readouterr().out
