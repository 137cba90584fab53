#!/usr/bin/env python3
"""Committee-failure probability curve.

Reads the CSV written by `repshard analyze committee-failure`
(columns: c,exact_tail,kl_bound) and renders both series on a log-scale
y axis, annotating the exact value at c = 240 when that row is present.

Usage:
    plot_failure_curve.py --in curve.csv --out curve.png

The script only renders CSV columns; all probabilities are computed by the
analysis tool that produced the file.
"""

import argparse
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

REQUIRED = ("c", "exact_tail", "kl_bound")


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(REQUIRED) - set(reader.fieldnames):
            sys.exit(f"error: {path} must have columns {','.join(REQUIRED)}")
        rows = [(int(r["c"]), float(r["exact_tail"]), float(r["kl_bound"]))
                for r in reader]
    if not rows:
        sys.exit(f"error: {path} has no data rows")
    return rows


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--in", dest="infile", required=True, help="input CSV")
    parser.add_argument("--out", dest="outfile", required=True, help="output PNG")
    args = parser.parse_args()

    rows = read_rows(args.infile)
    cs = [r[0] for r in rows]
    exact = [r[1] for r in rows]
    bound = [r[2] for r in rows]

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.semilogy(cs, exact, marker="o", markersize=3, label="exact tail")
    ax.semilogy(cs, bound, linestyle="--", label="Chernoff-KL bound")
    if 240 in cs:
        value = exact[cs.index(240)]
        ax.annotate(f"c=240: {value:.2e}", xy=(240, value),
                    xytext=(250, value * 30),
                    arrowprops=dict(arrowstyle="->", lw=0.8), fontsize=9)
    ax.set_xlabel("committee size c")
    ax.set_ylabel("failure probability")
    ax.set_title("Probability a sampled committee loses its honest majority")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(args.outfile, dpi=130)
    print(f"wrote {args.outfile}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
