"""Plot scripts consume the primary toolkit's CSVs and emit non-empty PNGs.

The CSVs are produced through the `repshard` command line (the only
interface the plotting layer touches); every script is then exercised via
subprocess exactly as a user would run it.
"""

import json
import subprocess
import sys
from pathlib import Path

import pytest

FIGURES_DIR = Path(__file__).resolve().parent.parent


def run(script, *args):
    return subprocess.run(
        [sys.executable, str(FIGURES_DIR / script), *args],
        capture_output=True, text=True,
    )


def repshard(*args):
    proc = subprocess.run(
        [sys.executable, "-m", "repshard.cli", *args],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="module")
def acceptance_csvs(tmp_path_factory):
    """Small-scale versions of the acceptance CSVs, via the CLI."""
    root = tmp_path_factory.mktemp("csvs")
    repshard("analyze", "committee-failure", "--n", "4000", "--t", "1333",
             "--c", "40:480:40", "--out", str(root / "curve.csv"))
    repshard("analyze", "cross-shard", "--m", "20:100:10",
             "--out", str(root / "cross.csv"))
    config = {
        "params": {"n": 200, "m": 10, "c": 20, "lambda": 4},
        "rounds": 40,
        "scheme": "both",
        "tx_source": {"type": "synthetic", "per_round": 80},
        "seed": 3,
    }
    (root / "config.json").write_text(json.dumps(config))
    repshard("simulate", "--config", str(root / "config.json"),
             "--scheme", "both", "--out", str(root))
    return root


class TestFailureCurve:
    def test_writes_nonempty_png(self, acceptance_csvs, tmp_path):
        out = tmp_path / "curve.png"
        proc = run("plot_failure_curve.py", "--in", str(acceptance_csvs / "curve.csv"),
                   "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        assert out.stat().st_size > 0

    def test_empty_csv_errors(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("c,exact_tail,kl_bound\n")
        proc = run("plot_failure_curve.py", "--in", str(empty),
                   "--out", str(tmp_path / "x.png"))
        assert proc.returncode != 0

    def test_missing_columns_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        proc = run("plot_failure_curve.py", "--in", str(bad),
                   "--out", str(tmp_path / "x.png"))
        assert proc.returncode != 0


class TestSimMetrics:
    def test_both_figures_written(self, acceptance_csvs, tmp_path):
        out = tmp_path / "figs"
        proc = run("plot_sim_metrics.py", "--in",
                   str(acceptance_csvs / "metrics_reputation.csv"),
                   str(acceptance_csvs / "metrics_random.csv"),
                   str(acceptance_csvs / "metrics_ratio.csv"),
                   "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        assert (out / "leader_ratio.png").stat().st_size > 0
        assert (out / "cumulative_ratio.png").stat().st_size > 0

    def test_single_scheme_skips_ratio_with_warning(self, acceptance_csvs, tmp_path):
        out = tmp_path / "figs"
        proc = run("plot_sim_metrics.py", "--in",
                   str(acceptance_csvs / "metrics_random.csv"), "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        assert (out / "leader_ratio.png").stat().st_size > 0
        assert not (out / "cumulative_ratio.png").exists()
        assert "skipped" in proc.stderr

    def test_missing_scheme_column_errors(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("round,leader_resource_ratio\n1,0.5\n")
        proc = run("plot_sim_metrics.py", "--in", str(bad),
                   "--out", str(tmp_path / "figs"))
        assert proc.returncode != 0

    def test_deterministic_output_bytes(self, acceptance_csvs, tmp_path):
        outs = []
        for rep in ("a", "b"):
            out = tmp_path / rep
            proc = run("plot_sim_metrics.py", "--in",
                       str(acceptance_csvs / "metrics_reputation.csv"),
                       str(acceptance_csvs / "metrics_random.csv"),
                       str(acceptance_csvs / "metrics_ratio.csv"),
                       "--out", str(out))
            assert proc.returncode == 0
            outs.append((out / "leader_ratio.png").read_bytes())
        assert outs[0] == outs[1]


class TestCrossShard:
    def test_writes_nonempty_png(self, acceptance_csvs, tmp_path):
        out = tmp_path / "cross.png"
        proc = run("plot_cross_shard.py", "--in", str(acceptance_csvs / "cross.csv"),
                   "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        assert out.stat().st_size > 0

    def test_single_row_plots_single_marker(self, tmp_path):
        single = tmp_path / "one.csv"
        single.write_text("m,fraction\n20,0.97\n")
        out = tmp_path / "one.png"
        proc = run("plot_cross_shard.py", "--in", str(single), "--out", str(out))
        assert proc.returncode == 0
        assert out.stat().st_size > 0

    def test_empty_csv_errors(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("m,fraction\n")
        proc = run("plot_cross_shard.py", "--in", str(empty),
                   "--out", str(tmp_path / "x.png"))
        assert proc.returncode != 0
