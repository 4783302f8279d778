import json
from pathlib import Path

import numpy as np
import pytest

from pairwalk.cli import CliError, main, parse_config


def run_cli(*argv):
    return main([str(a) for a in argv])


def read_csv(path):
    return np.genfromtxt(path, delimiter=",", names=True, dtype=None,
                         encoding="utf-8")


def test_parse_config_flat_file(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("n_sites = 40\ngamma = 0.01\nrealizations = 12\n")
    values = parse_config(cfg)
    assert values == {"n_sites": 40, "gamma": 0.01, "realizations": 12}


def test_parse_config_with_section_and_errors(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[experiment]\nseed = 9\n")
    assert parse_config(cfg) == {"seed": 9}

    bad = tmp_path / "bad.ini"
    bad.write_text("frobnicate = 1\n")
    with pytest.raises(CliError, match="frobnicate"):
        parse_config(bad)

    unparsable = tmp_path / "unparsable.ini"
    unparsable.write_text("n_sites = many\n")
    with pytest.raises(CliError, match="n_sites"):
        parse_config(unparsable)


def test_invalid_values_name_the_key(tmp_path, capsys):
    code = run_cli("evolve", "--n-sites", "2", "--out-dir", tmp_path,
                   "--realizations", "1", "--horizon", "1")
    assert code == 2
    assert "n_sites" in capsys.readouterr().err


def test_g0_above_one_warns_but_runs(tmp_path, capsys):
    code = run_cli("evolve", "--n-sites", "10", "--gamma", "1", "--g0", "1.5",
                   "--horizon", "0.5", "--sample-dt", "0.25",
                   "--realizations", "2", "--out-dir", tmp_path)
    assert code == 0
    assert "g0" in capsys.readouterr().err


def test_evolve_outputs_and_manifest(tmp_path):
    code = run_cli("evolve", "--n-sites", "16", "--u-over-j", "2",
                   "--gamma", "0.01", "--horizon", "1.0",
                   "--sample-dt", "0.5", "--realizations", "3",
                   "--seed", "5", "--out-dir", tmp_path)
    assert code == 0
    manifest = json.loads((tmp_path / "run_manifest.json").read_text())
    assert manifest["command"] == "evolve"
    assert manifest["noise_regime"] == "slow"
    assert manifest["master_seed"] == 5
    assert set(manifest["outputs"]) == {"variance_g0.01.csv",
                                        "occupation_g0.01.csv"}
    for name in manifest["outputs"]:
        assert (tmp_path / name).exists()

    var = read_csv(tmp_path / "variance_g0.01.csv")
    assert var.dtype.names == ("tau", "sigma2_raw", "sigma2_shifted", "stderr")
    assert var["tau"][0] == 0.0 and var["tau"][-1] == 1.0
    assert var["sigma2_raw"][0] == pytest.approx(0.25)
    assert var["sigma2_shifted"][0] == 0.0

    occ = read_csv(tmp_path / "occupation_g0.01.csv")
    assert occ.dtype.names == ("tau", "site", "n")
    by_tau = occ["n"].reshape(-1, 16).sum(axis=1)
    np.testing.assert_allclose(by_tau, 2.0, atol=1e-6)


def test_evolve_noiseless_default(tmp_path):
    code = run_cli("evolve", "--n-sites", "12", "--horizon", "0.5",
                   "--sample-dt", "0.25", "--out-dir", tmp_path)
    assert code == 0
    manifest = json.loads((tmp_path / "run_manifest.json").read_text())
    assert manifest["noise_regime"] == "none"
    assert "variance_noiseless.csv" in manifest["outputs"]


def test_deterministic_csv_bodies(tmp_path):
    args = ("evolve", "--n-sites", "12", "--u-over-j", "3", "--gamma", "2",
            "--horizon", "1.0", "--sample-dt", "0.5", "--realizations", "4",
            "--seed", "3")
    run_cli(*args, "--out-dir", tmp_path / "a")
    run_cli(*args, "--out-dir", tmp_path / "b")
    for name in ("variance_g2.csv", "occupation_g2.csv"):
        assert (tmp_path / "a" / name).read_bytes() == \
            (tmp_path / "b" / name).read_bytes()


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("n_sites = 12\nrealizations = 2\ngamma = 1.0\nseed = 1\n"
                   "horizon = 0.5\nsample_dt = 0.25\n")
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert run_cli("evolve", "--config", cfg, "--out-dir", out_a) == 0
    assert run_cli("evolve", "--config", cfg, "--seed", "2",
                   "--out-dir", out_b) == 0
    ma = json.loads((out_a / "run_manifest.json").read_text())
    mb = json.loads((out_b / "run_manifest.json").read_text())
    assert ma["parameters"]["n_sites"] == 12
    assert ma["master_seed"] == 1 and mb["master_seed"] == 2


def test_strict_guard_exit_code(tmp_path):
    # a long noiseless run on a small ring must trip the wraparound guard
    code = run_cli("evolve", "--n-sites", "12", "--horizon", "6",
                   "--sample-dt", "1.0", "--strict-guard",
                   "--out-dir", tmp_path)
    assert code == 1
    manifest = json.loads((tmp_path / "run_manifest.json").read_text())
    assert manifest["wraparound_warning"] is True


def test_bands_command(tmp_path):
    code = run_cli("bands", "--n-sites", "12", "--u-over-j", "0,14",
                   "--out-dir", tmp_path)
    assert code == 0
    rows = read_csv(tmp_path / "bands_u14.csv")
    assert rows.dtype.names == ("nu", "K", "E_over_J", "label")
    assert rows.shape[0] == 12 * 11 // 2
    assert set(np.unique(rows["label"])) <= {"bound", "scattering"}
    free = read_csv(tmp_path / "bands_u0.csv")
    # bound/scattering discrimination is meaningful on desk-scale rings and is
    # exercised at N=80 in the bands tests; here only the free range matters
    assert free["E_over_J"].min() > -4.1 and free["E_over_J"].max() < 4.1


def test_projections_command(tmp_path):
    code = run_cli("projections", "--n-sites", "12", "--u-over-j", "14",
                   "--start-offsets", "1", "--out-dir", tmp_path)
    assert code == 0
    rows = read_csv(tmp_path / "projections_u14_r1.csv")
    assert rows.dtype.names == ("E_over_J", "P")
    assert rows["P"].sum() == pytest.approx(1.0, abs=1e-10)


def test_gain_command(tmp_path):
    code = run_cli("gain", "--n-sites", "10", "--u-over-j", "14",
                   "--gamma-grid", "1,10", "--horizon", "1.0",
                   "--sample-dt", "0.5", "--realizations", "4",
                   "--out-dir", tmp_path)
    assert code == 0
    rows = read_csv(tmp_path / "gain.csv")
    assert rows.dtype.names == ("U_over_J", "gamma", "g_sigma", "stderr")
    assert rows.shape[0] == 2
    np.testing.assert_array_equal(rows["gamma"], [1.0, 10.0])


def test_autocorr_check_command(tmp_path):
    code = run_cli("autocorr-check", "--gamma", "1", "--samples", "500",
                   "--lags", "0.25,0.5", "--seed", "4", "--out-dir", tmp_path)
    assert code == 0
    rows = read_csv(tmp_path / "autocorr.csv")
    assert rows.dtype.names == ("lag", "estimate", "stderr", "analytic")
    np.testing.assert_allclose(rows["analytic"],
                               0.81 * np.exp(-2 * rows["lag"]), rtol=1e-12)
    cross = read_csv(tmp_path / "autocorr_cross.csv")
    assert np.all(cross["analytic"] == 0.0)


def test_sweep_noise_regimes_small(tmp_path):
    code = run_cli("sweep", "--preset", "noise-regimes", "--n-sites", "10",
                   "--horizon", "0.5", "--sample-dt", "0.25",
                   "--realizations", "2", "--out-dir", tmp_path)
    assert code == 0
    manifest = json.loads((tmp_path / "run_manifest.json").read_text())
    assert manifest["preset"] == "noise-regimes"
    names = set(manifest["outputs"])
    assert {"variance_noiseless.csv", "variance_slow.csv",
            "variance_fast.csv"} <= names
    assert {"occupation_noiseless.csv", "occupation_slow.csv",
            "occupation_fast.csv"} <= names


def test_sweep_variance_vs_start_small(tmp_path):
    code = run_cli("sweep", "--preset", "variance-vs-start", "--n-sites", "12",
                   "--horizon", "0.5", "--sample-dt", "0.25",
                   "--out-dir", tmp_path)
    assert code == 0
    manifest = json.loads((tmp_path / "run_manifest.json").read_text())
    # offsets beyond the ring size are skipped
    assert set(manifest["outputs"]) == {"variance_r1.csv", "variance_r3.csv",
                                        "variance_r10.csv"}
    assert manifest["parameters"]["u_over_j"] == 14.0
