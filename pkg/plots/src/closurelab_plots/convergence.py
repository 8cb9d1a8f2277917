"""Log-log convergence plot from a two-column (size, error) CSV with
reference slope guide lines."""

import argparse
import sys

import matplotlib.pyplot as plt

from .common import ParseError, numeric, read_csv, save


def render(csv_path, out_path, slopes=(1.0, 2.0, 4.0)):
    columns, rows = read_csv(csv_path)
    if len(columns) < 2:
        raise ParseError(f"{csv_path}: need two columns, got {columns}")
    data = numeric(rows, [0, 1])
    fig, ax = plt.subplots(figsize=(6, 4.2), constrained_layout=True)
    if data.shape[0] == 1:
        ax.plot(data[0, 0], data[0, 1], "o")
        ax.set_title("single data point")
    else:
        ax.loglog(data[:, 0], data[:, 1], "o-", label=columns[1])
        x = data[:, 0]
        for slope in slopes:
            guide = data[0, 1] * (x / x[0]) ** (-slope)
            ax.loglog(x, guide, "--", linewidth=0.8, label=f"slope -{slope:g}")
        ax.legend(fontsize=8)
    ax.set_xlabel(columns[0])
    ax.set_ylabel(columns[1])
    save(fig, out_path)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv")
    parser.add_argument("--out", required=True)
    parser.add_argument(
        "--slopes", type=str, default="1,2,4",
        help="comma-separated reference slopes (positive means decay)",
    )
    args = parser.parse_args(argv)
    try:
        slopes = tuple(float(s) for s in args.slopes.split(","))
        render(args.csv, args.out, slopes=slopes)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: bad --slopes value: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
