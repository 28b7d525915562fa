import math
from fractions import Fraction

import numpy as np
import pytest

from qamlab import cli, csvio


def test_fmt():
    assert csvio.fmt(0.1) == "0.10000000000000001"
    assert csvio.fmt(-0.0) == "0"
    assert csvio.fmt(None) == ""
    assert csvio.fmt(True) == "1"
    assert csvio.fmt(np.int64(7)) == "7"
    assert csvio.fmt(Fraction(1, 2)) == "1/2"
    assert csvio.fmt((10, -3)) == "10;-3"
    assert csvio.fmt(float("nan")) == "nan"
    assert float(csvio.fmt(math.pi)) == math.pi


def test_csv_roundtrip(tmp_path):
    path = csvio.write_csv(tmp_path / "x.csv", ("a", "b"), [(1, 0.25), (2, None)], {"seed": 3, "k": 2.5})
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.startswith(b"# tool=qamlab\n# version=")
    config, header, rows = csvio.read_csv(path)
    assert config["seed"] == "3" and config["k"] == "2.5"
    assert list(header) == ["a", "b"]
    assert rows == [["1", "0.25"], ["2", ""]]


def test_real_parser():
    assert cli.real("0.8pi") == pytest.approx(0.8 * math.pi)
    assert cli.real("20pi/13") == pytest.approx(20 * math.pi / 13)
    assert cli.real("-pi") == -math.pi
    assert cli.real("1e-3") == 1e-3
    assert cli.int_list("1-3,7") == [1, 2, 3, 7]


def test_resonance_command(capsys):
    assert cli.main(["resonance", "--p", "1", "--q", "2"]) == 0
    out = capsys.readouterr().out
    assert "beta_r = 0" in out
    assert "+0.50000000000000000 -0.50000000000000000" in out
    assert cli.main(["resonance", "--tau-over-2pi", "0.541", "--q-max", "13"]) == 0
    assert "   7   13" in capsys.readouterr().out


def test_exit_codes(tmp_path, capsys):
    assert cli.main(["resonance", "--p", "2", "--q", "4"]) == 2
    assert cli.main(["resonance"]) == 2
    # no seed: refuse
    assert cli.main(["evolve", "--k", "1", "--eta", "0", "--tau-min", "0.5", "--tau-max", "0.51",
                     "--n-tau", "2", "--kicks", "3", "--out", str(tmp_path)]) == 2
    assert cli.main(["nonsense"]) == 2
    # a valid configuration with no orbit to analyse is a computation failure
    assert cli.main(["stability", "--k-tilde", "0.01", "--drift", "1.0", "--n", "10"]) == 1
    capsys.readouterr()


def test_predict_command(capsys):
    argv = ["predict", "--p", "1", "--j", "1", "--dsum", "10", "--tau-over-2pi", "0.541",
            "--resonance", "7/13", "--eta-ratio", "0.126"]
    assert cli.main(argv) == 0
    out = capsys.readouterr().out
    tau = 2 * math.pi * 0.541
    eps = tau - 14 * math.pi / 13
    a = (2 * math.pi - 2 * math.pi * 10 / 13 - tau * 0.126 * tau) / eps
    assert float(out.split("a = ")[1].split()[0]) == pytest.approx(a, rel=1e-12)


def test_evolve_outputs_and_echo(tmp_path):
    argv = ["evolve", "--k", "0.8pi", "--eta-ratio", "0.126", "--tau-min", "0.5", "--tau-max", "0.51",
            "--n-tau", "3", "--kicks", "5", "--members", "4", "--seed", "9", "--history", "1",
            "--family", "2:1:1:0:0", "--out", str(tmp_path)]
    assert cli.main(argv) == 0
    for name in ("scan.csv", "heatmap.csv", "history_0001.csv", "overlay.csv"):
        assert (tmp_path / name).exists()
    config, header, rows = csvio.read_csv(tmp_path / "scan.csv")
    assert config["seed"] == "9" and config["command"] == "evolve"
    assert "out" not in config and "workers" not in config
    assert tuple(header) == csvio.SCAN_HEADER
    _, header, rows = csvio.read_csv(tmp_path / "history_0001.csv")
    assert len({r[0] for r in rows}) == 6
    total = sum(float(r[2]) for r in rows if r[0] == "5")
    assert total == pytest.approx(1.0, abs=1e-10)


def test_config_file_with_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# portrait settings\nk_tilde = 0.3\ndrift = 0.1\nq = 2\nn_seeds = 2\niters = 7\n")
    out = tmp_path / "p.csv"
    assert cli.main(["portrait", "--config", str(cfg), "--iters", "3", "--out", str(out)]) == 0
    config, _, rows = csvio.read_csv(out)
    assert config["iters"] == "3" and config["k_tilde"] == "0.29999999999999999"
    assert len(rows) == 4 * 4
    bad = tmp_path / "bad.cfg"
    bad.write_text("no_such_option = 1\n")
    assert cli.main(["portrait", "--config", str(bad)]) == 2


def test_orbits_and_stability_commands(tmp_path, capsys):
    out = tmp_path / "orbits.csv"
    assert cli.main(["orbits", "--k-tilde", "0.3", "--drift", "0.1", "--q", "2", "--periods", "1",
                     "--epsilon", "0.05", "--out", str(out)]) == 0
    _, header, rows = csvio.read_csv(out)
    assert len(rows) == 2 and sorted(r[header.index("stable")] for r in rows) == ["0", "1"]
    out = tmp_path / "stab.csv"
    assert cli.main(["stability", "--random-diag", "--k-tilde", "0.6", "--n", "200", "--seed", "1",
                     "--out", str(out)]) == 0
    _, _, rows = csvio.read_csv(out)
    assert len(rows) == 200
    capsys.readouterr()


def test_byte_identical_reruns(tmp_path):
    argv = ["evolve", "--k", "2.5", "--eta", "0.1", "--tau-min", "0.5", "--tau-max", "0.52",
            "--n-tau", "2", "--kicks", "4", "--members", "3", "--seed", "5"]
    assert cli.main([*argv, "--out", str(tmp_path / "a")]) == 0
    assert cli.main([*argv, "--out", str(tmp_path / "b"), "--workers", "2"]) == 0
    for name in ("scan.csv", "heatmap.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
