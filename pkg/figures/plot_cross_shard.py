#!/usr/bin/env python3
"""Cross-shard transaction fraction against the shard count.

Reads the CSV written by `repshard analyze cross-shard` (columns:
m,fraction) and plots the fraction with the y axis zoomed to [0.9, 1.0],
the interesting band for realistic input-count distributions. Values are
rendered exactly as found in the CSV.

Usage:
    plot_cross_shard.py --in cross_shard.csv --out cross_shard.png
"""

import argparse
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

REQUIRED = ("m", "fraction")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--in", dest="infile", required=True, help="input CSV")
    parser.add_argument("--out", dest="outfile", required=True, help="output PNG")
    args = parser.parse_args()

    with open(args.infile, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(REQUIRED) - set(reader.fieldnames):
            sys.exit(f"error: {args.infile} must have columns {','.join(REQUIRED)}")
        rows = [(int(r["m"]), float(r["fraction"])) for r in reader]
    if not rows:
        sys.exit(f"error: {args.infile} has no data rows")

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot([r[0] for r in rows], [r[1] for r in rows], marker="s", markersize=4)
    ax.set_xlabel("number of shards")
    ax.set_ylabel("fraction of cross-shard transactions")
    ax.set_ylim(0.9, 1.0)
    ax.set_title("Cross-shard transactions under random hash splitting")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(args.outfile, dpi=130)
    print(f"wrote {args.outfile}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
