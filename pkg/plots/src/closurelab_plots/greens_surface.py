"""Two-panel heatmap of a tabulated kernel pair (exact vs orthogonal
approximation) with a shared color scale."""

import argparse
import sys

import matplotlib.pyplot as plt
import numpy as np

from .common import ParseError, numeric, read_csv, save


def load_kernel_table(path):
    columns, rows = read_csv(path, expected_header=["x", "y", "value"])
    data = numeric(rows, [0, 1, 2])
    x = np.unique(data[:, 0])
    y = np.unique(data[:, 1])
    if x.size * y.size != data.shape[0]:
        raise ParseError(f"{path}: values do not fill an x-y grid")
    values = data[:, 2].reshape(x.size, y.size)
    kind = rows[0][3] if len(rows[0]) > 3 else "kernel"
    return x, y, values, kind


def render(csv_exact, csv_approx, out_path):
    """Returns the shared (vmin, vmax) used by both panels."""
    x1, y1, v1, kind1 = load_kernel_table(csv_exact)
    x2, y2, v2, kind2 = load_kernel_table(csv_approx)
    if x1.shape != x2.shape or not np.allclose(x1, x2) or not np.allclose(y1, y2):
        raise ParseError("kernel tables are tabulated on different grids")
    vmin = float(min(v1.min(), v2.min()))
    vmax = float(max(v1.max(), v2.max()))
    fig, axes = plt.subplots(1, 2, figsize=(10, 4.2), constrained_layout=True)
    for ax, (vals, kind) in zip(axes, ((v1, kind1), (v2, kind2))):
        im = ax.pcolormesh(
            y1, x1, vals, vmin=vmin, vmax=vmax, shading="nearest", cmap="RdBu_r"
        )
        ax.set_xlabel("y")
        ax.set_ylabel("x")
        ax.set_title(kind)
        ax.text(
            0.02, 0.98, f"min={vmin:.3g} max={vmax:.3g}",
            transform=ax.transAxes, va="top", fontsize=8,
        )
    fig.colorbar(im, ax=axes, shrink=0.9)
    save(fig, out_path)
    return vmin, vmax


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv_exact")
    parser.add_argument("csv_approx")
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    try:
        render(args.csv_exact, args.csv_approx, args.out)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
