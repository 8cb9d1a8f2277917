"""Line plot of trajectory CSV data: modal coefficient series over time."""

import argparse
import sys

import matplotlib.pyplot as plt
import numpy as np

from .common import ParseError, numeric, read_csv, save

MAX_SERIES = 20


def render(csv_path, out_path):
    _, rows = read_csv(csv_path, expected_header=["t", "element", "mode", "value"])
    data = numeric(rows, [0, 1, 2, 3])
    times = np.unique(data[:, 0])
    keys = sorted({(int(r[1]), int(r[2])) for r in data})
    fig, ax = plt.subplots(figsize=(7, 4.2), constrained_layout=True)
    for elem, mode in keys[:MAX_SERIES]:
        mask = (data[:, 1] == elem) & (data[:, 2] == mode)
        series = data[mask]
        order = np.argsort(series[:, 0])
        if series.shape[0] == 1:
            ax.plot(series[0, 0], series[0, 3], "o", label=f"e{elem} m{mode}")
        else:
            ax.plot(series[order, 0], series[order, 3], label=f"e{elem} m{mode}")
    ax.set_xlabel("t")
    ax.set_ylabel("coefficient")
    ax.set_title(f"{len(keys)} series, {times.size} snapshots")
    if len(keys) <= 8:
        ax.legend(fontsize=7)
    save(fig, out_path)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv")
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    try:
        render(args.csv, args.out)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
