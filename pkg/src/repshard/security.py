"""Analytic bounds and Monte-Carlo experiments for committee security.

Covers the hypergeometric tail of committee sampling (exact log-space
summation plus a big-integer oracle), the Kullback-Leibler Chernoff bound,
partial-set insecurity, and the reshuffling experiments: d rounds of
marking and uniform redistribution against a mildly-adaptive adversary,
with per-trial black/white accounting.

The reshuffling model here is the bare partition one: every node is
markable and the groups carry no leader or referee roles, matching the
analysis setting (at alpha = 1 a committee's membership is a fresh uniform
sample of the whole population).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import SystemParams

STRATEGY_WORST_CASE = "worst-case-committee"
STRATEGY_RANDOM = "random-f-fraction"
STRATEGIES = (STRATEGY_WORST_CASE, STRATEGY_RANDOM)


def kl_divergence(a: float, p: float) -> float:
    """Kullback-Leibler divergence D(a || p) between Bernoulli parameters."""
    if not (0.0 < a < 1.0 and 0.0 < p < 1.0):
        raise ValueError("kl_divergence needs a, p strictly inside (0, 1)")
    return a * math.log(a / p) + (1.0 - a) * math.log((1.0 - a) / (1.0 - p))


def log_binom(n: int, k: int) -> float:
    """log of C(n, k) via log-gamma; -inf outside the support."""
    if k < 0 or k > n:
        return float("-inf")
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _check_tail_args(t: int, n: int, c: int, threshold: int) -> None:
    if not (0 <= t <= n):
        raise ValueError(f"need 0 <= t <= n, got t={t}, n={n}")
    if not (1 <= c <= n):
        raise ValueError(f"need 1 <= c <= n, got c={c}, n={n}")
    if threshold < 0:
        raise ValueError("threshold must be non-negative")


def hypergeometric_tail_exact(t: int, n: int, c: int, threshold: int) -> float:
    """P[X >= threshold] for X ~ Hypergeometric(population n, marked t, draws c).

    Exact summation of C(t,x) C(n-t,c-x) / C(n,c) in log space, so it stays
    finite for populations where factorials would overflow fixed-width
    arithmetic.
    """
    _check_tail_args(t, n, c, threshold)
    lo = max(threshold, max(0, c - (n - t)))
    hi = min(t, c)
    if lo > hi:
        return 0.0
    log_denom = log_binom(n, c)
    logs = [log_binom(t, x) + log_binom(n - t, c - x) - log_denom for x in range(lo, hi + 1)]
    peak = max(logs)
    total = math.fsum(math.exp(v - peak) for v in logs)
    return min(1.0, math.exp(peak) * total)


def hypergeometric_tail_bigint(t: int, n: int, c: int, threshold: int) -> Fraction:
    """Exact rational tail via big-integer enumeration; the oracle path."""
    _check_tail_args(t, n, c, threshold)
    lo = max(threshold, max(0, c - (n - t)))
    hi = min(t, c)
    if lo > hi:
        return Fraction(0)
    numer = sum(math.comb(t, x) * math.comb(n - t, c - x) for x in range(lo, hi + 1))
    return Fraction(numer, math.comb(n, c))


@dataclass(frozen=True)
class BoundReport:
    """One failure-curve row: exact tail next to its Chernoff-KL bound."""

    n: int
    t: int
    c: int
    threshold: int
    exact_value: float
    bound_value: float


def committee_failure_curve(n: int, t: int, c_values) -> list:
    """Exact committee-failure tails and KL bounds across committee sizes.

    Failure means at least ceil(c/2) malicious members in a uniform
    c-sample; the bound is exp(-D(1/2 || t/n) * c).
    """
    f = t / n
    rows = []
    for c in c_values:
        threshold = math.ceil(c / 2)
        exact = hypergeometric_tail_exact(t, n, c, threshold)
        bound = math.exp(-kl_divergence(0.5, f) * c)
        rows.append(BoundReport(n=n, t=t, c=int(c), threshold=threshold,
                                exact_value=exact, bound_value=bound))
    return rows


def partial_set_insecurity(f: float, lam: int, m: int):
    """(single committee, union over m committees) insecurity probabilities.

    A partial set is insecure when all lam supervisors are malicious:
    f**lam for one committee, m * f**lam by the union bound.
    """
    if not (0.0 <= f < 1.0):
        raise ValueError("f must lie in [0, 1)")
    if lam < 1 or m < 1:
        raise ValueError("lam and m must be >= 1")
    single = f ** lam
    return single, m * single


@dataclass
class EcfrTrialStats:
    """Per-trial counters from one reshuffling experiment.

    ``newly_marked`` has one row per round offset (first-time marks per
    group); the remaining arrays are per-group counts at round r + d.
    """

    newly_marked: np.ndarray
    white: np.ndarray
    black: np.ndarray
    corrupted_black: np.ndarray
    malicious: np.ndarray

    @property
    def total_black(self) -> int:
        return int(self.black.sum())

    @property
    def total_corrupted_black(self) -> int:
        return int(self.corrupted_black.sum())


@dataclass
class EcfrAggregate:
    """Trial-wise outcome arrays from the reshuffling Monte Carlo."""

    params: SystemParams
    d: int
    strategy: str
    alpha: float
    trials: int
    seed: int
    max_white_frac: np.ndarray
    black_total: np.ndarray
    corrupted_black_total: np.ndarray
    any_committee_failed: np.ndarray
    target_fully_malicious: np.ndarray
    malicious_counts: np.ndarray
    white_counts: np.ndarray

    @property
    def failure_frequency(self) -> float:
        return float(self.any_committee_failed.mean())

    def white_fraction_exceed_frequency(self, beta: float) -> float:
        """Empirical P[some group keeps more than a beta fraction white]."""
        c = self.params.c
        return float((self.white_counts > beta * c).any(axis=1).mean())


def _trial_rngs(seed: int, trials: int, offset: int = 0):
    """Per-trial generators; trial i's stream depends only on (seed, i), so
    chunked parallel runs aggregate to the same result as a serial one."""
    children = np.random.SeedSequence(seed).spawn(offset + trials)[offset:]
    return [np.random.default_rng(s) for s in children]


def ecfr_single_trial(params: SystemParams, d: int, strategy: str,
                      rng: np.random.Generator, alpha: float) -> EcfrTrialStats:
    """One experiment: corrupt at round r, reshuffle d rounds, count at r + d."""
    n, c = params.n, params.c
    groups = n // c
    assign = np.repeat(np.arange(groups), c)

    if strategy == STRATEGY_WORST_CASE:
        corrupted = np.zeros(n, dtype=bool)
        corrupted[:c] = True  # the whole round-r membership of group 0
    elif strategy == STRATEGY_RANDOM:
        corrupted = np.zeros(n, dtype=bool)
        k = int(params.f * n)
        corrupted[rng.choice(n, size=k, replace=False)] = True
    else:
        raise ValueError(f"unknown adversary strategy: {strategy!r}")

    ever = np.zeros(n, dtype=bool)
    newly = np.zeros((d, groups), dtype=np.int64)
    for i in range(d):
        marked = rng.random(n) < alpha
        first_time = marked & ~ever
        newly[i] = np.bincount(assign[first_time], minlength=groups)
        ever |= marked
        idx = np.flatnonzero(marked)
        if len(idx):
            assign[idx] = assign[idx][rng.permutation(len(idx))]

    black = np.bincount(assign[ever], minlength=groups)
    white = c - black
    malicious = np.bincount(assign[corrupted], minlength=groups)
    corrupted_black = np.bincount(assign[ever & corrupted], minlength=groups)
    return EcfrTrialStats(
        newly_marked=newly,
        white=white,
        black=black,
        corrupted_black=corrupted_black,
        malicious=malicious,
    )


def ecfr_trial_block(params: SystemParams, d: int, adversary_strategy: str,
                     seed: int, alpha: float, offset: int, count: int):
    """Raw per-trial arrays for trials [offset, offset + count); the unit of
    work for parallel execution."""
    c = params.c
    groups = params.n // c
    max_white = np.empty(count)
    black_tot = np.empty(count, dtype=np.int64)
    cb_tot = np.empty(count, dtype=np.int64)
    failed = np.empty(count, dtype=bool)
    target_full = np.empty(count, dtype=bool)
    mal_counts = np.empty((count, groups), dtype=np.int64)
    white_counts = np.empty((count, groups), dtype=np.int64)

    for trial, rng in enumerate(_trial_rngs(seed, count, offset)):
        stats = ecfr_single_trial(params, d, adversary_strategy, rng, alpha)
        max_white[trial] = stats.white.max() / c
        black_tot[trial] = stats.total_black
        cb_tot[trial] = stats.total_corrupted_black
        failed[trial] = bool((stats.malicious >= c / 2).any())
        target_full[trial] = bool(stats.malicious[0] == c)
        mal_counts[trial] = stats.malicious
        white_counts[trial] = stats.white
    return max_white, black_tot, cb_tot, failed, target_full, mal_counts, white_counts


def ecfr_montecarlo(params: SystemParams, d: int, adversary_strategy: str,
                    trials: int, seed: int, alpha: float | None = None,
                    jobs: int = 1) -> EcfrAggregate:
    """Monte-Carlo verification of the reshuffling security claim.

    Starts each trial from a fresh round-r partition, applies the chosen
    corruption strategy, reshuffles d rounds at the given alpha and reports
    the per-trial black/white/malicious accounting. A committee fails when
    its malicious count reaches half its size. ``jobs`` > 1 splits the
    trials across processes without changing any per-trial stream.
    """
    if adversary_strategy not in STRATEGIES:
        raise ValueError(f"unknown adversary strategy: {adversary_strategy!r}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    alpha = params.alpha if alpha is None else alpha

    if jobs > 1 and trials > 1:
        from concurrent.futures import ProcessPoolExecutor

        jobs = min(jobs, trials)
        bounds = np.linspace(0, trials, jobs + 1).astype(int)
        tasks = [
            (params, d, adversary_strategy, seed, alpha, int(lo), int(hi - lo))
            for lo, hi in zip(bounds, bounds[1:]) if hi > lo
        ]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            blocks = list(pool.map(_ecfr_block_star, tasks))
        parts = [np.concatenate(arrs) for arrs in zip(*blocks)]
        (max_white, black_tot, cb_tot, failed, target_full,
         mal_counts, white_counts) = parts
    else:
        (max_white, black_tot, cb_tot, failed, target_full,
         mal_counts, white_counts) = ecfr_trial_block(
            params, d, adversary_strategy, seed, alpha, 0, trials
        )

    return EcfrAggregate(
        params=params, d=d, strategy=adversary_strategy, alpha=alpha,
        trials=trials, seed=seed,
        max_white_frac=max_white,
        black_total=black_tot,
        corrupted_black_total=cb_tot,
        any_committee_failed=failed,
        target_fully_malicious=target_full,
        malicious_counts=mal_counts,
        white_counts=white_counts,
    )


def _ecfr_block_star(task):
    return ecfr_trial_block(*task)


def lemma1_bound(alpha: float, c: int, d: int, m: int) -> float:
    """Union-bound probability that some committee keeps > beta fraction white.

    beta is pinned to (1 - alpha^2)**d; the per-committee term is
    d * exp(-0.5 * ((1-alpha)*alpha/(1+alpha)) * beta * c).
    """
    beta = (1.0 - alpha * alpha) ** d
    per_committee = d * math.exp(-0.5 * ((1.0 - alpha) * alpha / (1.0 + alpha)) * beta * c)
    return m * per_committee


def lemma1_empirical_check(params: SystemParams, d: int, trials: int, seed: int,
                           alpha: float | None = None):
    """Empirical frequency of the slow-mixing event next to its analytic bound.

    Returns (empirical, bound, beta). The event is that some committee still
    has more than a beta = (1-alpha^2)^d fraction of never-marked nodes
    after d rounds.
    """
    alpha = params.alpha if alpha is None else alpha
    beta = (1.0 - alpha * alpha) ** d
    agg = ecfr_montecarlo(params, d, STRATEGY_RANDOM, trials, seed, alpha=alpha)
    empirical = agg.white_fraction_exceed_frequency(beta)
    bound = lemma1_bound(alpha, params.c, d, params.m)
    return empirical, bound, beta
