import json
import subprocess
import sys

import numpy as np
import pytest
from scipy import stats

from repshard.cli import main, parse_range
from repshard.sharding import default_input_distribution, save_input_distribution


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "repshard.cli", *args],
        capture_output=True, text=True,
    )


SMALL_CONFIG = {
    "params": {"n": 60, "m": 6, "c": 10, "lambda": 2},
    "rounds": 8,
    "scheme": "both",
    "resource_dist": {"a": 1.0, "b": 7.0, "scale": 100.0},
    "tx_source": {"type": "synthetic", "per_round": 60},
    "seed": 5,
}


@pytest.fixture
def small_config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(SMALL_CONFIG))
    return path


class TestParseRange:
    def test_single_value(self):
        assert parse_range("240") == [240]

    def test_min_max_step(self):
        assert parse_range("10:50:10") == [10, 20, 30, 40, 50]

    def test_bad_range_raises(self):
        from repshard.cli import UsageError

        with pytest.raises(UsageError):
            parse_range("10:5:1")
        with pytest.raises(UsageError):
            parse_range("a:b")


class TestSimulate:
    def test_both_schemes_write_three_csvs(self, small_config_path, tmp_path):
        out = tmp_path / "out"
        code = main([
            "simulate", "--config", str(small_config_path),
            "--scheme", "both", "--out", str(out),
        ])
        assert code == 0
        assert (out / "metrics_reputation.csv").exists()
        assert (out / "metrics_random.csv").exists()
        ratio_lines = (out / "metrics_ratio.csv").read_text().splitlines()
        assert ratio_lines[0] == "round,cumulative_tx_ratio"
        assert len(ratio_lines) == SMALL_CONFIG["rounds"] + 1

    def test_missing_config_exits_2(self, tmp_path):
        code = main(["simulate", "--config", str(tmp_path / "nope.json")])
        assert code == 2

    def test_zero_rounds_exits_2(self, small_config_path):
        code = main(["simulate", "--config", str(small_config_path), "--rounds", "0"])
        assert code == 2

    def test_bad_config_field_exits_2(self, tmp_path):
        path = tmp_path / "bad.json"
        doc = dict(SMALL_CONFIG)
        doc["params"] = {"n": 61, "m": 6, "c": 10, "lambda": 2}
        path.write_text(json.dumps(doc))
        code = main(["simulate", "--config", str(path)])
        assert code == 2

    def test_determinism_byte_identical(self, small_config_path, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            assert main([
                "simulate", "--config", str(small_config_path),
                "--scheme", "reputation", "--out", str(out), "--seed", "9",
            ]) == 0
        a = (out1 / "metrics_reputation.csv").read_bytes()
        b = (out2 / "metrics_reputation.csv").read_bytes()
        assert a == b


class TestAnalyze:
    def test_committee_failure_anchor(self, tmp_path, capsys):
        out = tmp_path / "curve.csv"
        code = main([
            "analyze", "committee-failure",
            "--n", "4000", "--t", "1333", "--c", "240", "--out", str(out),
        ])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "c,exact_tail,kl_bound"
        c, exact, bound = lines[1].split(",")
        assert float(exact) < 2.8e-8
        assert float(exact) <= float(bound)

    def test_committee_failure_sweep_rows(self, tmp_path):
        out = tmp_path / "curve.csv"
        code = main([
            "analyze", "committee-failure",
            "--n", "1000", "--t", "300", "--c", "10:100:10", "--out", str(out),
        ])
        assert code == 0
        assert len(out.read_text().splitlines()) == 11

    def test_committee_failure_bad_t_exits_2(self, tmp_path):
        code = main([
            "analyze", "committee-failure",
            "--n", "100", "--t", "200", "--c", "10",
            "--out", str(tmp_path / "x.csv"),
        ])
        assert code == 2

    def test_partial_set_values_and_note(self, tmp_path, capsys):
        out = tmp_path / "ps.csv"
        code = main([
            "analyze", "partial-set",
            "--f", "0.3333333", "--lambda", "40", "--m", "20", "--out", str(out),
        ])
        assert code == 0
        captured = capsys.readouterr().out
        assert "single=" in captured
        assert "note:" in captured
        row = out.read_text().splitlines()[1].split(",")
        assert float(row[3]) == pytest.approx(8.2e-20, rel=0.05)

    def test_ecfr_writes_trials(self, tmp_path):
        out = tmp_path / "ecfr.csv"
        code = main([
            "analyze", "ecfr", "--n", "110", "--m", "10", "--c", "10",
            "--f", "0.3", "--d", "2", "--beta", "0.125",
            "--trials", "50", "--seed", "3", "--out", str(out),
        ])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "trial,max_white_frac,Y,Z,any_committee_failed"
        assert len(lines) == 51

    def test_lemma1_summary(self, tmp_path, capsys):
        out = tmp_path / "l1.csv"
        code = main([
            "analyze", "lemma1", "--c", "30", "--alpha", "0.6", "--d", "2",
            "--m", "5", "--trials", "300", "--seed", "2", "--out", str(out),
        ])
        assert code == 0
        assert "empirical=" in capsys.readouterr().out

    def test_cross_shard_sweep(self, tmp_path):
        out = tmp_path / "cs.csv"
        code = main([
            "analyze", "cross-shard", "--m", "20:100:10", "--out", str(out),
        ])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "m,fraction"
        first = float(lines[1].split(",")[1])
        last = float(lines[-1].split(",")[1])
        assert first == pytest.approx(0.96, abs=0.03)
        assert last > 0.99

    def test_cross_shard_with_dist_file(self, tmp_path):
        dist_path = tmp_path / "dist.csv"
        save_input_distribution(default_input_distribution(), dist_path)
        out = tmp_path / "cs.csv"
        code = main([
            "analyze", "cross-shard", "--dist", str(dist_path),
            "--m", "20", "--out", str(out),
        ])
        assert code == 0


class TestGenTxs:
    def test_row_count_and_input_range(self, tmp_path):
        out = tmp_path / "trace.csv"
        code = main([
            "gen-txs", "--count", "1000", "--rounds", "4",
            "--seed", "1", "--out", str(out),
        ])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "round,tx_id,n_inputs,valid"
        assert len(lines) == 1001
        for line in lines[1:]:
            r, tx_id, k, valid = line.split(",")
            assert 1 <= int(k) <= 12
            assert valid == "1"
            assert 0 <= int(r) < 4

    def test_fixed_seed_identical_bytes(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert main([
                "gen-txs", "--count", "200", "--seed", "7", "--out", str(out),
            ]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_histogram_matches_distribution(self, tmp_path):
        out = tmp_path / "trace.csv"
        assert main([
            "gen-txs", "--count", "100000", "--seed", "3", "--out", str(out),
        ]) == 0
        dist = default_input_distribution()
        counts = np.zeros(13)
        for line in out.read_text().splitlines()[1:]:
            counts[int(line.split(",")[2])] += 1
        ks = sorted(dist.probabilities)
        observed = np.array([counts[k] for k in ks])
        expected = np.array([dist.probabilities[k] * 100000 for k in ks])
        keep = expected >= 5
        chi2 = (((observed - expected) ** 2 / expected)[keep]).sum()
        p = stats.chi2.sf(chi2, int(keep.sum()) - 1)
        assert p > 0.001

    def test_unreadable_dist_exits_2(self, tmp_path):
        code = main([
            "gen-txs", "--count", "10", "--dist", str(tmp_path / "nope.csv"),
            "--seed", "1", "--out", str(tmp_path / "t.csv"),
        ])
        assert code == 2


class TestHelp:
    def test_subcommand_help_mentions_flags(self):
        proc = run_cli("analyze", "committee-failure", "--help")
        assert proc.returncode == 0
        for flag in ("--n", "--t", "--c", "--out", "--jobs"):
            assert flag in proc.stdout
        assert "exact_tail" in proc.stdout  # documents the CSV schema

    def test_all_subcommands_have_help(self):
        for cmd in (["simulate"], ["gen-txs"], ["analyze", "partial-set"],
                    ["analyze", "ecfr"], ["analyze", "lemma1"],
                    ["analyze", "cross-shard"]):
            proc = run_cli(*cmd, "--help")
            assert proc.returncode == 0
            assert "--" in proc.stdout
