import csv
import json
import math
import subprocess
import sys

import pytest

from privamp.cli import (EXIT_CAP, EXIT_CONFIG, EXIT_OK, ConfigError, config_hash, fmt, run,
                         validate_config)
from privamp.prob_types import binary_entropy


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def rows(out):
    with open(out / "results.csv") as fh:
        return list(csv.DictReader(fh))


def test_fmt_twelve_digits():
    assert fmt(math.pi) == "3.14159265359"
    assert fmt(-0.0) == "0"
    assert fmt(True) == "true" and fmt(7) == "7" and fmt(float("inf")) == "inf"


@pytest.mark.parametrize("text,path", [
    ("[scenario]\nmodulus = 4\n", "scenario.modulus"),
    ("[scenario]\nW = [[0.9, 0.0], [0.1, 0.9]]\n", "scenario.W[0]"),
    ("[scenario]\nn = \"three\"\n", "scenario.n"),
    ("[scenario]\nbogus = 1\n", "scenario"),
    ("[scenario]\nn = 2\nm = 3\n", "scenario.m"),
    ("[scenario]\np_x = [0.5, 0.6]\n", "scenario.p_x"),
    ("[leakage]\neta = [0.1, -0.2]\n", "leakage.eta[1]"),
    ("[simulate]\ntrials = 0\n", "simulate.trials"),
    ("[scenario]\nmodulus = 3\n", "scenario.bsc"),
])
def test_config_errors_name_the_field(tmp_path, capsys, text, path):
    code = run(["simulate", "--config", write(tmp_path, text), "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG
    err = capsys.readouterr().err
    assert f"config error at {path}" in err
    assert not (tmp_path / "o").exists()


def test_validate_raises_config_error():
    with pytest.raises(ConfigError) as exc:
        validate_config({"scenario": {"adversary": "truncation"}})
    assert exc.value.path == "scenario.R_A"


def test_bad_toml(tmp_path):
    assert run(["region", "--config", write(tmp_path, "[scenario\n"), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_cap_refusal(tmp_path, capsys):
    cfg = write(tmp_path, "cap = 1000\n[scenario]\nn = 6\nm = 3\n")
    assert run(["leakage", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CAP
    assert "enumeration cap 1000" in capsys.readouterr().err


def test_verify_default_passes(tmp_path):
    out = tmp_path / "v"
    assert run(["verify", "--out", str(out)]) == EXIT_OK
    report = (out / "report.txt").read_text()
    assert "all checks passed" in report
    assert all(r["passed"] == "true" for r in rows(out))


def test_simulate_outputs_and_seed_override(tmp_path):
    cfg = write(tmp_path, "[scenario]\nn = 3\nm = 1\nA = [[1], [1], [1]]\nb = [0]\nW = [[1.0, 0.0], [0.0, 1.0]]\n"
                          "[simulate]\ntrials = 20000\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["simulate", "--config", cfg, "--out", str(a), "--seed", "5"]) == EXIT_OK
    assert run(["simulate", "--config", cfg, "--out", str(b), "--seed", "6"]) == EXIT_OK
    ra, rb = rows(a)[0], rows(b)[0]
    assert float(ra["exact_error_prob"]) == pytest.approx(0.75)
    assert ra["errors"] != rb["errors"] and ra["config_hash"] != rb["config_hash"]
    doc = json.loads((a / "results.json").read_text())
    assert doc["seed"] == 5 and doc["config"]["scenario"]["n"] == 3
    assert doc["config_hash"] == ra["config_hash"] == config_hash(doc["config"])


def test_leakage_command(tmp_path):
    cfg = write(tmp_path, "[scenario]\nn = 2\nm = 1\nA = [[1], [1]]\nb = [0]\nbsc = 0.1\n")
    out = tmp_path / "l"
    assert run(["leakage", "--config", cfg, "--out", str(out)]) == EXIT_OK
    rs = rows(out)
    assert len(rs) == 4
    assert rs[0]["leakage_joint"] == rs[0]["leakage_reduced"]
    assert all(float(r["leakage_joint"]) <= float(r["divergence_bound"]) + 1e-10 for r in rs)


def test_exponent_five_rows(tmp_path):
    cfg = write(tmp_path, "[exponent]\nR = [0.1, 0.2, 0.3, 0.4, 0.5]\ngrid = 9\nn_starts = 8\n")
    out = tmp_path / "e"
    assert run(["exponent", "--config", cfg, "--out", str(out)]) == EXIT_OK
    rs = rows(out)
    assert [float(r["R"]) for r in rs] == [0.1, 0.2, 0.3, 0.4, 0.5]
    assert {"E", "F", "mu", "alpha"} <= set(rs[0])


def test_region_corners(tmp_path):
    cfg = write(tmp_path, "[region]\nsweep = 11\nn_starts = 4\n")
    out = tmp_path / "r"
    assert run(["region", "--config", cfg, "--out", str(out)]) == EXIT_OK
    rs = rows(out)
    first, last = rs[0], rs[-1]
    assert float(first["R_A"]) == 0 and float(first["R"]) == pytest.approx(math.log(2))
    assert float(last["R_A"]) == pytest.approx(math.log(2))
    assert float(last["R"]) == pytest.approx(binary_entropy(0.1), abs=1e-9)


def test_module_entry_point(tmp_path):
    out = tmp_path / "m"
    cfg = write(tmp_path, "[simulate]\ntrials = 1000\n")
    r = subprocess.run([sys.executable, "-m", "privamp.cli", "simulate", "--config", cfg,
                        "--out", str(out), "--workers", "1"], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert (out / "report.txt").exists() and (out / "results.json").exists()
