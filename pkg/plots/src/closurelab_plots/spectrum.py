"""Log-log energy spectrum plot from a (k, E) CSV."""

import argparse
import sys

import matplotlib.pyplot as plt

from .common import ParseError, numeric, read_csv, save


def render(csv_path, out_path):
    _, rows = read_csv(csv_path, expected_header=["k", "E"])
    data = numeric(rows, [0, 1])
    positive = data[(data[:, 0] > 0) & (data[:, 1] > 0)]
    fig, ax = plt.subplots(figsize=(6, 4.2), constrained_layout=True)
    if positive.shape[0] == 0:
        ax.plot(data[:, 0], data[:, 1], "o")
        ax.set_title("spectrum (no positive modes)")
    else:
        ax.loglog(positive[:, 0], positive[:, 1], "o-")
        k = positive[:, 0]
        guide = positive[0, 1] * (k / k[0]) ** (-5.0 / 3.0)
        ax.loglog(k, guide, "k--", linewidth=0.8, label="slope -5/3")
        ax.legend(fontsize=8)
    ax.set_xlabel("k")
    ax.set_ylabel("E(k)")
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
