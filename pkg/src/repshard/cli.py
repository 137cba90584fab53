"""Command-line front door: simulate, analyze, gen-txs.

All randomness flows from a single --seed, every command is deterministic
given its flags, and every CSV is UTF-8 with LF line endings. Range flags
accept ``min:max:step`` or a single value. Exit codes: 0 success, 2 usage
or config error, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import engine, security, sharding
from .engine import ConfigError, SCHEME_RANDOM, SCHEME_REPUTATION
from .model import SystemParams
from .reshuffle import alpha_for_beta

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3


class UsageError(Exception):
    pass


def parse_range(text: str) -> list:
    """Parse ``min:max:step`` (or a single integer) into a list of ints."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return [int(parts[0])]
        if len(parts) == 2:
            lo, hi = int(parts[0]), int(parts[1])
            step = 1
        elif len(parts) == 3:
            lo, hi, step = (int(p) for p in parts)
        else:
            raise ValueError
    except ValueError:
        raise UsageError(f"bad range {text!r}: expected INT or MIN:MAX:STEP") from None
    if step < 1 or lo > hi:
        raise UsageError(f"bad range {text!r}: need MIN <= MAX and STEP >= 1")
    return list(range(lo, hi + 1, step))


def _write_rows(path, header, rows):
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for row in rows:
                fh.write(",".join(str(v) for v in row) + "\n")
    except OSError as exc:
        raise exc


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _load_input(loader, path, what):
    try:
        return loader(path)
    except FileNotFoundError:
        raise UsageError(f"cannot read {what}: {path}") from None


def cmd_simulate(args) -> int:
    config = _load_input(engine.load_sim_config, args.config, "config")
    overrides = {}
    if args.rounds is not None:
        if args.rounds < 1:
            raise UsageError("rounds must be >= 1")
        overrides["rounds"] = args.rounds
    if args.seed is not None:
        overrides["seed"] = args.seed
    scheme = args.scheme or config.scheme

    base = engine.SimConfig(
        params=config.params,
        rounds=overrides.get("rounds", config.rounds),
        scheme=config.scheme,
        resource_dist=config.resource_dist,
        tx_source=config.tx_source,
        adversary=config.adversary,
        total_reward_per_round=config.total_reward_per_round,
        seed=overrides.get("seed", config.seed),
    )
    os.makedirs(args.out, exist_ok=True)

    if scheme == "both":
        results = engine.run_comparison(base)
        for name, result in results.items():
            engine.write_metrics_csv(
                os.path.join(args.out, f"metrics_{name}.csv"), result.metrics
            )
        with open(os.path.join(args.out, "metrics_ratio.csv"), "w",
                  newline="", encoding="utf-8") as fh:
            fh.write("round,cumulative_tx_ratio\n")
            for r, value in engine.cumulative_ratio_series(results):
                fh.write(f"{r},{value!r}\n")
        ratio = (
            results[SCHEME_REPUTATION].cumulative_txs
            / max(1, results[SCHEME_RANDOM].cumulative_txs)
        )
        rep = results[SCHEME_REPUTATION].metrics
        tail = [m.leader_resource_ratio for m in rep[-min(100, len(rep)):]]
        print(
            f"rounds={base.rounds} cumulative_tx_ratio={ratio:.4f} "
            f"reputation_leader_ratio_tail={sum(tail) / len(tail):.4f} evictions=0"
        )
    else:
        cfg = engine.SimConfig(
            params=base.params, rounds=base.rounds, scheme=scheme,
            resource_dist=base.resource_dist, tx_source=base.tx_source,
            adversary=base.adversary,
            total_reward_per_round=base.total_reward_per_round, seed=base.seed,
        )
        result = engine.run_simulation(cfg)
        engine.write_metrics_csv(
            os.path.join(args.out, f"metrics_{scheme}.csv"), result.metrics
        )
        tail = [m.leader_resource_ratio for m in result.metrics[-min(100, len(result.metrics)):]]
        print(
            f"rounds={cfg.rounds} scheme={scheme} "
            f"cumulative_txs={result.cumulative_txs} "
            f"leader_ratio_tail={sum(tail) / len(tail):.4f} evictions=0"
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze subcommands
# ---------------------------------------------------------------------------


def _failure_row(task):
    n, t, c = task
    threshold = math.ceil(c / 2)
    exact = security.hypergeometric_tail_exact(t, n, c, threshold)
    bound = math.exp(-security.kl_divergence(0.5, t / n) * c)
    return c, exact, bound


def cmd_committee_failure(args) -> int:
    cs = parse_range(args.c)
    if args.t > args.n:
        raise UsageError("t must not exceed n")
    tasks = [(args.n, args.t, c) for c in cs]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_failure_row, tasks))
    else:
        rows = [_failure_row(t) for t in tasks]
    _write_rows(
        args.out, "c,exact_tail,kl_bound",
        [(c, _fmt(e), _fmt(b)) for c, e, b in rows],
    )
    last = rows[-1]
    print(f"n={args.n} t={args.t} c={last[0]}: exact_tail={last[1]:.6g} kl_bound={last[2]:.6g}")
    divergence = security.kl_divergence(0.5, args.t / args.n)
    if divergence < 1 / 12:
        print(
            f"note: exp(-c/12) at c={last[0]} is {math.exp(-last[0] / 12):.6g}, "
            f"but D(1/2||{args.t / args.n:.4g}) = {divergence:.4g} < 1/12, so that "
            "simpler rate is not implied by the KL bound; the exact tail is "
            "authoritative."
        )
    return EXIT_OK


def cmd_partial_set(args) -> int:
    single, union = security.partial_set_insecurity(args.f, getattr(args, "lambda"), args.m)
    _write_rows(
        args.out, "f,lambda,m,single,union",
        [(_fmt(args.f), getattr(args, "lambda"), args.m, _fmt(single), _fmt(union))],
    )
    print(f"single={single:.6g} union={union:.6g}")
    print(
        "note: a union bound of 2e-19 is often quoted for f=1/3, lambda=40, "
        "m=20, but m*f^lambda evaluates to ~1.6e-18; the computed value is "
        "reported."
    )
    return EXIT_OK


def cmd_ecfr(args) -> int:
    params = SystemParams(
        n=args.n, m=args.m, c=args.c, lam=max(1, min(args.c - 1, 2)),
        f=args.f, alpha=args.alpha if args.alpha is not None else 0.5, d=args.d,
    )
    alpha = args.alpha
    if alpha is None:
        if args.beta is None:
            raise UsageError("provide --alpha or --beta")
        alpha = alpha_for_beta(args.beta, args.d)
    agg = security.ecfr_montecarlo(
        params, args.d, args.strategy, args.trials, args.seed, alpha=alpha,
        jobs=args.jobs,
    )
    rows = [
        (
            trial,
            _fmt(agg.max_white_frac[trial]),
            int(agg.black_total[trial]),
            int(agg.corrupted_black_total[trial]),
            int(agg.any_committee_failed[trial]),
        )
        for trial in range(args.trials)
    ]
    _write_rows(args.out, "trial,max_white_frac,Y,Z,any_committee_failed", rows)
    print(
        f"alpha={alpha:.6f} trials={args.trials} "
        f"failure_frequency={agg.failure_frequency:.6g} "
        f"target_fully_malicious={int(agg.target_fully_malicious.sum())}"
    )
    return EXIT_OK


def cmd_lemma1(args) -> int:
    params = SystemParams(
        n=(args.m + 1) * args.c, m=args.m, c=args.c,
        lam=max(1, min(args.c - 1, 2)), alpha=args.alpha, d=args.d,
    )
    empirical, bound, beta = security.lemma1_empirical_check(
        params, args.d, args.trials, args.seed
    )
    _write_rows(
        args.out, "alpha,beta,c,d,m,trials,empirical,bound",
        [(
            _fmt(args.alpha), _fmt(beta), args.c, args.d, args.m, args.trials,
            _fmt(empirical), _fmt(bound),
        )],
    )
    print(f"beta={beta:.6g} empirical={empirical:.6g} bound={bound:.6g}")
    return EXIT_OK


def cmd_cross_shard(args) -> int:
    if args.dist:
        dist = _load_input(sharding.load_input_distribution, args.dist,
                           "distribution file")
    else:
        dist = sharding.default_input_distribution()
    ms = parse_range(args.m)
    rows = [(m, _fmt(sharding.cross_shard_fraction(dist, m))) for m in ms]
    _write_rows(args.out, "m,fraction", rows)
    print(f"m={ms[0]}..{ms[-1]}: fraction {rows[0][1]} .. {rows[-1][1]}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# gen-txs
# ---------------------------------------------------------------------------


def cmd_gen_txs(args) -> int:
    if args.count < 1:
        raise UsageError("count must be >= 1")
    if args.rounds < 1:
        raise UsageError("rounds must be >= 1")
    if args.dist:
        dist = _load_input(sharding.load_input_distribution, args.dist,
                           "distribution file")
    else:
        dist = sharding.default_input_distribution()
    if max(dist.probabilities) > sharding.MAX_INPUTS:
        raise UsageError(f"distribution exceeds the {sharding.MAX_INPUTS}-input cutoff")
    rng = np.random.default_rng(np.random.SeedSequence((args.seed, 0xA881)))
    draws = dist.sample(rng, args.count)
    try:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            fh.write("round,tx_id,n_inputs,valid\n")
            for index, k in enumerate(draws):
                tx_id = engine.synth_tx_id(args.seed, index)
                r = index % args.rounds
                fh.write(f"{r},{tx_id.hex()},{int(k)},1\n")
    except OSError:
        raise
    print(f"wrote {args.count} transactions over {args.rounds} rounds to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repshard",
        description="Simulator and analysis toolkit for reputation-driven "
                    "sharded-committee consensus.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser(
        "simulate", help="run the round loop and write metrics CSVs",
        description="Run the round loop and write one metrics CSV per scheme "
                    "with columns: round,scheme,leader_resource_ratio,"
                    "txs_processed,cumulative_txs,evictions,msgs_leader,"
                    "msgs_member,msgs_referee.",
    )
    sim.add_argument("--config", required=True, help="JSON simulation config")
    sim.add_argument("--scheme", choices=["reputation", "random", "both"],
                     help="override the config's leader-selection scheme")
    sim.add_argument("--rounds", type=int, help="override the round count")
    sim.add_argument("--seed", type=int, help="override the master seed")
    sim.add_argument("--out", default=".", help="output directory for metrics CSVs")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="security and sharding analyses")
    ana_sub = ana.add_subparsers(dest="analysis", required=True)

    cf = ana_sub.add_parser(
        "committee-failure",
        help="exact hypergeometric failure tail vs KL bound",
        description="Exact committee-failure probability (at least ceil(c/2) "
                    "malicious members in a uniform c-sample) next to the "
                    "Chernoff-KL bound. CSV columns: c,exact_tail,kl_bound.",
    )
    cf.add_argument("--n", type=int, required=True, help="population size")
    cf.add_argument("--t", type=int, required=True, help="malicious count")
    cf.add_argument("--c", required=True, help="committee size or MIN:MAX:STEP sweep")
    cf.add_argument("--out", default="committee_failure.csv", help="output CSV path")
    cf.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    cf.set_defaults(func=cmd_committee_failure)

    ps = ana_sub.add_parser(
        "partial-set",
        help="partial-set insecurity f^lambda and its union bound",
        description="Probability that a size-lambda partial set is entirely "
                    "malicious, singly and union-bounded over m committees. "
                    "CSV columns: f,lambda,m,single,union.",
    )
    ps.add_argument("--f", type=float, required=True, help="malicious fraction")
    ps.add_argument("--lambda", type=int, required=True, help="partial-set size")
    ps.add_argument("--m", type=int, required=True, help="committee count")
    ps.add_argument("--out", default="partial_set.csv", help="output CSV path")
    ps.set_defaults(func=cmd_partial_set)

    ec = ana_sub.add_parser(
        "ecfr",
        help="reshuffling Monte Carlo against a mildly-adaptive adversary",
        description="Reshuffle d rounds after the adversary picks its "
                    "corruption set and report per-trial mixing stats. "
                    "CSV columns: trial,max_white_frac,Y,Z,"
                    "any_committee_failed.",
    )
    ec.add_argument("--n", type=int, required=True, help="population size")
    ec.add_argument("--m", type=int, required=True, help="committee count")
    ec.add_argument("--c", type=int, required=True, help="committee size")
    ec.add_argument("--f", type=float, default=1 / 3, help="malicious fraction")
    ec.add_argument("--d", type=int, default=1, help="corruption delay in rounds")
    ec.add_argument("--alpha", type=float, help="marking probability")
    ec.add_argument("--beta", type=float, help="derive alpha from beta=(1-a^2)^d")
    ec.add_argument("--strategy", choices=list(security.STRATEGIES),
                    default=security.STRATEGY_WORST_CASE, help="adversary strategy")
    ec.add_argument("--trials", type=int, default=1000, help="Monte-Carlo trials")
    ec.add_argument("--seed", type=int, default=0, help="master seed")
    ec.add_argument("--jobs", type=int, default=1, help="parallel trial workers")
    ec.add_argument("--out", default="ecfr_trials.csv", help="output CSV path")
    ec.set_defaults(func=cmd_ecfr)

    l1 = ana_sub.add_parser(
        "lemma1",
        help="slow-mixing event frequency vs its analytic bound",
        description="Empirical probability that some committee keeps more "
                    "than a beta=(1-alpha^2)^d fraction of never-marked nodes "
                    "after d rounds, next to the analytic union bound. CSV "
                    "columns: alpha,beta,c,d,m,trials,empirical,bound.",
    )
    l1.add_argument("--c", type=int, required=True, help="committee size")
    l1.add_argument("--alpha", type=float, required=True, help="marking probability")
    l1.add_argument("--d", type=int, required=True, help="rounds of reshuffling")
    l1.add_argument("--m", type=int, required=True, help="committee count")
    l1.add_argument("--trials", type=int, default=10000, help="Monte-Carlo trials")
    l1.add_argument("--seed", type=int, default=0, help="master seed")
    l1.add_argument("--out", default="lemma1.csv", help="output CSV path")
    l1.set_defaults(func=cmd_lemma1)

    cs = ana_sub.add_parser(
        "cross-shard",
        help="cross-shard transaction fraction per shard count",
        description="Closed-form probability that a random transaction "
                    "references an input outside its home shard. CSV columns: "
                    "m,fraction.",
    )
    cs.add_argument("--dist", help="input-count distribution CSV (inputs,probability)")
    cs.add_argument("--m", required=True, help="shard count or MIN:MAX:STEP sweep")
    cs.add_argument("--out", default="cross_shard.csv", help="output CSV path")
    cs.set_defaults(func=cmd_cross_shard)

    gen = sub.add_parser(
        "gen-txs", help="write a synthetic transaction trace CSV",
        description="Synthetic transaction trace with ids derived from "
                    "(seed, index) and input counts drawn from the "
                    "distribution (truncated at 12). CSV columns: "
                    "round,tx_id,n_inputs,valid.",
    )
    gen.add_argument("--count", type=int, required=True, help="transactions to emit")
    gen.add_argument("--dist", help="input-count distribution CSV")
    gen.add_argument("--rounds", type=int, default=1, help="rounds to spread rows over")
    gen.add_argument("--seed", type=int, default=0, help="master seed")
    gen.add_argument("--out", required=True, help="output CSV path")
    gen.set_defaults(func=cmd_gen_txs)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help; pass both through
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.excepthook = sys.__excepthook__
    raise SystemExit(main())
