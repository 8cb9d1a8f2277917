"""Shared CSV parsing and deterministic rendering settings.

These scripts are read-only views of the solver's CSV outputs; they never
recompute physics. Rendering is pinned (Agg backend, fixed DPI, stable PNG
metadata) so repeated renders of the same data are byte-identical.
"""

import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

DPI = 120
METADATA = {"Software": "closurelab-plots"}

FIGURE_KINDS = ("greens-surface", "solution-profile", "spectrum", "convergence")


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: input CSVs, figure kind, output image path."""

    kind: str
    inputs: tuple
    output: str
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ParseError(f"unknown figure kind {self.kind!r}")
        expected = 2 if self.kind == "greens-surface" else 1
        if len(self.inputs) != expected:
            raise ParseError(f"{self.kind} needs {expected} input CSV(s)")
        for path in self.inputs:
            if not os.path.exists(path):
                raise ParseError(f"input CSV does not exist: {path}")


def render_figure(spec: FigureSpec):
    """Dispatch a FigureSpec to the matching renderer."""
    from . import convergence, greens_surface, solution_profile, spectrum

    if spec.kind == "greens-surface":
        return greens_surface.render(spec.inputs[0], spec.inputs[1], spec.output)
    if spec.kind == "solution-profile":
        return solution_profile.render(spec.inputs[0], spec.output)
    if spec.kind == "spectrum":
        return spectrum.render(spec.inputs[0], spec.output)
    return convergence.render(
        spec.inputs[0], spec.output, slopes=spec.options.get("slopes", (1.0, 2.0, 4.0))
    )


def read_csv(path, expected_header=None):
    """Load a numeric CSV with a one-line header; raises ParseError with the
    offending path on malformed or empty input."""
    try:
        with open(path) as fh:
            header = fh.readline().strip()
            if not header:
                raise ParseError(f"{path}: empty file")
            columns = header.split(",")
            rows = []
            for ln, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != len(columns):
                    raise ParseError(f"{path}:{ln}: expected {len(columns)} fields")
                rows.append(parts)
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if expected_header is not None and columns[: len(expected_header)] != expected_header:
        raise ParseError(f"{path}: header {columns} != {expected_header}")
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return columns, rows


def numeric(rows, columns):
    """Numeric view of selected columns (by index)."""
    try:
        return np.array([[float(r[c]) for c in columns] for r in rows])
    except ValueError as exc:
        raise ParseError(f"non-numeric field: {exc}") from exc


def save(fig, out_path):
    fig.savefig(out_path, dpi=DPI, metadata=METADATA)
    plt.close(fig)
