import subprocess
import sys

import pytest


@pytest.fixture(scope="session")
def cli_outputs(tmp_path_factory):
    """CSV corpus produced by the solver CLI (the package's only interface
    to the primary component)."""
    root = tmp_path_factory.mktemp("cli_outputs")
    commands = {
        "greens": ["greens"],
        "upwind": ["upwind-equiv"],
        "advect": ["advect"],
        "burgers": ["burgers"],
    }
    for name, argv in commands.items():
        out = root / name
        proc = subprocess.run(
            [sys.executable, "-m", "closurelab.cli", *argv, "--out", str(out), "--seed", "3"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, f"{name} failed: {proc.stderr}"
    return root
