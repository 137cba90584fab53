#!/usr/bin/env python3
"""Leader-resource and cumulative-throughput figures from simulation metrics.

Reads the per-scheme metrics CSVs written by `repshard simulate`
(columns: round,scheme,leader_resource_ratio,...) plus, optionally, the
metrics_ratio.csv companion (round,cumulative_tx_ratio) from a --scheme both
run, and writes:

    leader_ratio.png      leader resource ratio per round, one series per scheme
    cumulative_ratio.png  reputation/random cumulative transaction ratio

If only one scheme is supplied the second figure is skipped with a warning.
All quantities are plotted exactly as found in the CSVs.

Usage:
    plot_sim_metrics.py --in metrics_reputation.csv metrics_random.csv \
                        metrics_ratio.csv --out outdir
"""

import argparse
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

SCHEME_COLUMNS = {"round", "scheme", "leader_resource_ratio"}
RATIO_COLUMNS = {"round", "cumulative_tx_ratio"}


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = set(reader.fieldnames or ())
        rows = list(reader)
    if not rows:
        sys.exit(f"error: {path} has no data rows")
    return fields, rows


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--in", dest="infiles", nargs="+", required=True,
                        help="metrics CSVs (and optional ratio CSV)")
    parser.add_argument("--out", dest="outdir", required=True,
                        help="output directory for PNGs")
    args = parser.parse_args()

    series = {}
    ratio_rows = None
    for path in args.infiles:
        fields, rows = read_csv(path)
        if RATIO_COLUMNS <= fields:
            ratio_rows = rows
            continue
        if not SCHEME_COLUMNS <= fields:
            sys.exit(
                f"error: {path} lacks the scheme metrics columns "
                f"{','.join(sorted(SCHEME_COLUMNS))}"
            )
        for row in rows:
            series.setdefault(row["scheme"], []).append(
                (int(row["round"]), float(row["leader_resource_ratio"]))
            )

    if not series:
        sys.exit("error: no scheme metrics supplied")

    os.makedirs(args.outdir, exist_ok=True)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for scheme in sorted(series):
        points = sorted(series[scheme])
        ax.plot([p[0] for p in points], [p[1] for p in points],
                label=f"{scheme} selection", linewidth=1.0)
    ax.set_xlabel("round")
    ax.set_ylabel("leader resource ratio")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("Mean leader resources relative to the top-m nodes")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    leader_png = os.path.join(args.outdir, "leader_ratio.png")
    fig.savefig(leader_png, dpi=130)
    print(f"wrote {leader_png}")

    if len(series) < 2 or ratio_rows is None:
        print("warning: cumulative-ratio figure skipped "
              "(needs both schemes plus metrics_ratio.csv)", file=sys.stderr)
        return 0

    fig2, ax2 = plt.subplots(figsize=(7, 4.5))
    rounds = [int(r["round"]) for r in ratio_rows]
    ratios = [float(r["cumulative_tx_ratio"]) for r in ratio_rows]
    ax2.plot(rounds, ratios, color="tab:orange", linewidth=1.2)
    ax2.axhline(1.0, color="grey", linewidth=0.8, linestyle=":")
    ax2.set_xlabel("round")
    ax2.set_ylabel("cumulative transactions, reputation / random")
    ax2.set_title("Accumulated throughput ratio of the two selection schemes")
    ax2.grid(True, alpha=0.3)
    fig2.tight_layout()
    ratio_png = os.path.join(args.outdir, "cumulative_ratio.png")
    fig2.savefig(ratio_png, dpi=130)
    print(f"wrote {ratio_png}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
