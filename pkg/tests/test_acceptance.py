"""End-to-end acceptance checks. Each prints one PASS/FAIL line in the summary."""

import filecmp
import subprocess
import sys
import time

import pytest

from privamp import suites

from conftest import record


def _run(key, label, check, **kwargs):
    t0 = time.perf_counter()
    res = check(**kwargs)
    res.elapsed = time.perf_counter() - t0
    record(key, label, res.passed, f"{res.name}: margin {res.margin:.3g}, {res.elapsed:.1f}s")
    for d in res.details:
        print(d)
    return res


def test_collision_probabilities_exact():
    res = _run(1, "collision probabilities of the affine ensemble", suites.check_collision_counts)
    assert res.passed, res.details
    assert res.elapsed < 60


def test_leakage_below_divergence_bound():
    res = _run(2, "exact leakage below the divergence bound", suites.check_leakage_bound)
    assert res.passed, res.details
    assert res.data["instances"] >= 100 and res.elapsed < 300


def test_ensemble_leakage_below_theta():
    res = _run(3, "ensemble-average leakage below Theta", suites.check_ensemble_leakage)
    assert res.passed, res.details


def test_tail_bound_and_events():
    res = _run(4, "Theta tail bound and typicality events", suites.check_tail_events)
    assert res.passed, res.details


def test_error_exponent_closed_form():
    res = _run(5, "error exponent against the uniform-binary closed form", suites.check_error_exponent)
    assert res.passed, res.details


def test_ensemble_error_bound():
    res = _run(6, "per-type ensemble error bound (exhaustive and sampled)", suites.check_ensemble_error)
    assert res.passed, res.details


def test_region_sum_rate_and_convexity():
    res = _run(7, "helper-region sum-rate minimum and convexity", suites.check_region_sum_rate)
    assert res.passed, res.details


TILDE = "tilde-family properties"


def test_tilde_bounds():
    res = _run(8, TILDE, suites.check_tilde_bounds)
    assert res.passed, res.details


def test_tilde_derivatives():
    res = _run(8, TILDE, suites.check_tilde_derivatives)
    assert res.passed, res.details


def test_tilde_concavity():
    res = _run(8, TILDE, suites.check_tilde_concavity)
    assert res.passed, res.details


def test_F_dominates_F_tilde():
    res = _run(8, TILDE, suites.check_F_dominates_tilde)
    assert res.passed, res.details


def test_tilde_quadratic_lower_bound():
    res = _run(8, TILDE, suites.check_tilde_quadratic_floor)
    assert res.passed, res.details


def test_F_tilde_positive_outside_region():
    res = _run(8, TILDE, suites.check_tilde_positivity)
    # informational: the same points with the rate term weighted by (1 - mu)
    alt = suites.check_tilde_positivity(variant="mu-bar-rate")
    record(8, TILDE, True, f"informational {alt.name}: "
                           f"{'holds' if alt.passed else 'fails'} (margin {alt.margin:.3g})")
    assert res.passed, res.details


def test_exponent_vanishes_exactly_on_region():
    res = _run(9, "secrecy exponent zero inside and positive outside the helper region",
               suites.check_region_consistency)
    assert res.passed, res.details


def test_finite_length_trend():
    res = _run(10, "finite-length trend of best encoders", suites.check_finite_n_trend)
    assert res.passed, res.details


STOCHASTIC = {
    "simulate": "[simulate]\ntrials = 200000\n[scenario]\nn = 4\nm = 2\np_x = [0.8, 0.2]\n",
    "leakage": "[scenario]\nn = 3\nm = 2\nadversary = \"type-quantizer\"\n",
    "exponent": "[exponent]\nR = [0.2, 0.4]\nR_A = [0.1]\ngrid = 17\ntilde = true\n",
    "region": "[region]\nsweep = 21\n",
    "verify": "",
}


@pytest.mark.parametrize("command", sorted(STOCHASTIC))
def test_byte_identical_reruns(tmp_path, command):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text(STOCHASTIC[command])
    outs = []
    for i, workers in enumerate((1, 2)):
        out = tmp_path / f"run{i}"
        r = subprocess.run([sys.executable, "-m", "privamp.cli", command, "--config", str(cfg),
                            "--out", str(out), "--seed", "17", "--workers", str(workers)],
                           capture_output=True, text=True)
        assert r.returncode == 0, r.stderr
        outs.append(out)
    names = ["results.csv", "results.json", "report.txt"]
    match, mismatch, errors = filecmp.cmpfiles(outs[0], outs[1], names, shallow=False)
    ok = match == names
    record(11, "byte-identical reruns of every seeded command", ok, f"{command}: {'same' if ok else mismatch}")
    assert ok, (mismatch, errors)
