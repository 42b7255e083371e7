import json

import pytest

from s6v.cli import main


def run(tmp_path, name, *args):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def test_sample_byte_identical(tmp_path):
    args = ("sample", "--delta1", "0.6", "--delta2", "0.2", "--x", "8", "--y", "6", "--seed", "42")
    c1, o1 = run(tmp_path, "a", *args)
    c2, o2 = run(tmp_path, "b", *args)
    assert c1 == c2 == 0
    for name in ("ensemble.bin", "ensemble.txt", "heights.csv"):
        assert (o1 / name).read_bytes() == (o2 / name).read_bytes()
    man = json.loads((o1 / "manifest.json").read_text())
    assert man["generator_version"] == "splitmix64-fold/1"
    assert man["config"]["seed"] == 42


def test_rerun_from_manifest(tmp_path):
    c1, o1 = run(tmp_path, "a", "asep", "--T", "3", "--R", "0.2", "--replicates", "20", "--sites", "0,2", "--seed", "5")
    c2, o2 = run(tmp_path, "b", "asep", "--config", str(o1 / "manifest.json"))
    assert c1 == c2 == 0
    m1 = json.loads((o1 / "manifest.json").read_text())
    m2 = json.loads((o2 / "manifest.json").read_text())
    assert m1["artifacts"] == m2["artifacts"]
    assert (o1 / "asep.csv").read_bytes() == (o2 / "asep.csv").read_bytes()


def test_missing_key_exit_2(tmp_path, caplog):
    code, _ = run(tmp_path, "a", "sample", "--delta1", "0.6", "--x", "3", "--y", "3")
    assert code == 2
    assert "delta2" in caplog.text


def test_unknown_key_exit_2(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[sample]\ndelta1 = 0.6\ndelta2 = 0.2\nx = 3\ny = 3\ncolour = red\n")
    code, _ = run(tmp_path, "a", "sample", "--config", str(ini))
    assert code == 2


def test_flags_override_file(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[run]\nseed = 1\n[sample]\ndelta1 = 0.6\ndelta2 = 0.2\nx = 3\ny = 3\n")
    code, out = run(tmp_path, "a", "sample", "--config", str(ini), "--seed", "9", "--x", "4")
    assert code == 0
    cfg = json.loads((out / "manifest.json").read_text())["config"]
    assert cfg["seed"] == 9 and cfg["x"] == 4 and cfg["y"] == 3 and cfg["replicates"] == 1000


def test_precondition_exit_2(tmp_path):
    code, _ = run(tmp_path, "a", "step-tail", "--delta1", "0.4", "--delta2", "0.1", "--x", "10", "--y", "200")
    assert code == 2


def test_mgf_check(tmp_path):
    code, out = run(tmp_path, "a", "mgf-check", "--delta1", "0.5", "--delta2", "0.1")
    assert code == 0
    assert json.loads((out / "summary.json").read_text())["max_abs_error"] <= 1e-12


def test_failed_check_exit_1(tmp_path):
    # a non-stationary pair fails the exact stationarity check
    code, _ = run(tmp_path, "a", "stationarity", "--delta1", "0.6", "--delta2", "0.2", "--b1", "0.5",
                  "--x", "2", "--y", "2")
    assert code == 1


@pytest.mark.parametrize("args", [
    ("oracle", "--delta1", "0.6", "--delta2", "0.2", "--boundary", "step", "--x", "1", "--y", "1"),
    ("analytics", "--delta1", "0.4", "--delta2", "0.1", "--y", "300"),
    ("two-point", "--delta1", "0.6", "--delta2", "0.2", "--x", "3", "--y", "2"),
    ("second-class", "--delta1", "0.6", "--delta2", "0.2", "--x", "6", "--y", "6", "--replicates", "50",
     "--mode", "antiparticle"),
    ("height-tail", "--delta1", "0.4", "--delta2", "0.1", "--y", "300", "--replicates", "200", "--u", "0,0.5"),
    ("degenerate", "--replicates", "200", "--epsilons", "0.2,0.1"),
])
def test_subcommands_run(tmp_path, args):
    code, out = run(tmp_path, "a", *args)
    assert code in (0, 1)
    assert (out / "manifest.json").exists()
