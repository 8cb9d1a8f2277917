import json

import numpy as np
import pytest

from closurelab.cli import main


def run(args):
    return main([str(a) for a in args])


def test_greens_subcommand(tmp_path):
    out = tmp_path / "greens"
    assert run(["greens", "--out", out]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["experiment"] == "greens"
    assert all(c["pass"] for c in summary["checks"])
    names = {c["name"] for c in summary["checks"]}
    assert "csv_roundtrip" in names and "asymmetry_metric" in names
    data = np.loadtxt(out / "greens_exact.csv", delimiter=",", skiprows=1, usecols=(0, 1, 2))
    assert data.shape[1] == 3
    assert (out / "config_used.json").exists()


def test_greens_flags_symmetric_kernel(tmp_path):
    out = tmp_path / "sym"
    assert run(["greens", "--out", out, "--c", 0.0]) == 0
    summary = json.loads((out / "summary.json").read_text())
    flagged = [c for c in summary["checks"] if c["name"] == "symmetric_kernel_flagged"]
    assert len(flagged) == 1
    assert flagged[0]["value"] < 1e-9


def test_upwind_equiv_deterministic_bytes(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run(["upwind-equiv", "--out", out1, "--seed", 11]) == 0
    assert run(["upwind-equiv", "--out", out2, "--seed", 11, "--jobs", 2]) == 0
    for name in ("upwind_sweep.csv", "s2_over_s1.csv", "kernel_sample.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    s1 = json.loads((out1 / "summary.json").read_text())
    s2 = json.loads((out2 / "summary.json").read_text())
    assert s1["checks"] == s2["checks"]


def test_upwind_equiv_tolerance_violation_exit_code(tmp_path):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps({"tolerance": 1e-18}))
    out = tmp_path / "hard"
    assert run(["upwind-equiv", "--out", out, "--config", cfgfile]) == 1


def test_config_error_exit_codes(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"no_such_key": 1}))
    assert run(["greens", "--out", tmp_path / "x", "--config", bad]) == 2
    # flags that do not apply to the subcommand are configuration errors
    assert run(["greens", "--out", tmp_path / "y", "--dt", 0.1]) == 2
    # invalid numeric config propagates as a configuration error
    assert run(["advect", "--out", tmp_path / "z", "--dt", -0.5]) == 2


def test_linear_memory_subcommand(tmp_path):
    out = tmp_path / "mem"
    assert run(["linear-memory", "--out", out]) == 0
    table = np.loadtxt(out / "memory_convergence.csv", delimiter=",", skiprows=1)
    assert table.shape == (4, 2)
    assert np.all(np.diff(table[:, 1]) < 0)  # errors fall with n_s
    summary = json.loads((out / "summary.json").read_text())
    err = [c for c in summary["checks"] if c["name"] == "master_identity_error"][0]
    assert err["value"] < 1e-6
    traj = np.loadtxt(out / "trajectory.csv", delimiter=",", skiprows=1)
    assert traj.shape[1] == 4  # t, element, mode, value


def test_advect_subcommand_matches_upwind(tmp_path):
    out = tmp_path / "adv"
    assert run(["advect", "--out", out]) == 0
    summary = json.loads((out / "summary.json").read_text())
    match = [c for c in summary["checks"] if c["name"] == "matches_upwind_trajectory"][0]
    assert match["value"] < 1e-10
    diag = np.loadtxt(out / "diagnostics_closed.csv", delimiter=",", skiprows=1)
    assert diag.shape[1] == 3


def test_burgers_subcommand(tmp_path):
    out = tmp_path / "burg"
    assert run(["burgers", "--out", out]) == 0
    summary = json.loads((out / "summary.json").read_text())
    balance = [c for c in summary["checks"] if c["name"] == "reference_dissipation_balance"][0]
    assert balance["value"] <= 0.02
    spec = np.loadtxt(out / "spectrum_closed.csv", delimiter=",", skiprows=1)
    assert spec.shape[1] == 2
    assert spec[0, 0] == 0  # wavenumber column starts at k = 0
