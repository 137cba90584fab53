"""Committee bootstrapping and expected-constant-fraction reshuffling.

Bootstrapping forms a fresh uniform configuration: a random referee
committee, a uniform partition of the rest into m working committees, and
the m highest-reputation non-referee nodes placed as leaders (one per
committee, in random order).

The per-round reshuffle marks each eligible node independently with
probability alpha and deals the marked pool back into the vacated slots via
a uniform permutation, so committee sizes are conserved exactly and every
marked node's destination is uniform over open slots. Leaders and referee
members are exempt: leader placement is re-derived from reputation each
round and the referee is re-sampled, so marking them would be meaningless.
"""

from __future__ import annotations

import math

import numpy as np

from .model import Committee, CommitteeConfig, SystemParams


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def top_by_reputation(reputations, candidates, count: int) -> list:
    """The ``count`` highest-reputation candidates, ties broken by smaller id."""
    ranked = sorted(candidates, key=lambda i: (-reputations[i], i))
    return ranked[:count]


def draw_partial_set(members, leader, lam: int, rng: np.random.Generator) -> frozenset:
    pool = sorted(members - {leader})
    picked = rng.choice(len(pool), size=lam, replace=False)
    return frozenset(pool[i] for i in picked)


def bootstrap(nodes, params: SystemParams, seed) -> CommitteeConfig:
    """Form a round-0 configuration from scratch.

    ``nodes`` is the full roster (any iterable of Node); its reputations
    drive leader choice. Raises ValueError when the roster size does not
    match params.n.
    """
    rng = _rng(seed)
    roster = {n.id: n for n in nodes}
    if len(roster) != params.n or set(roster) != set(range(params.n)):
        raise ValueError(f"roster must be exactly the ids 0..{params.n - 1}")

    ids = np.arange(params.n)
    perm = rng.permutation(ids)
    if params.has_referee:
        referee = frozenset(int(i) for i in perm[: params.c])
        remaining = [int(i) for i in perm[params.c:]]
    else:
        referee = frozenset()
        remaining = [int(i) for i in perm]

    reputations = {i: roster[i].reputation for i in remaining}
    leaders = top_by_reputation(reputations, remaining, params.m)
    leader_order = [leaders[i] for i in rng.permutation(params.m)]

    followers = [i for i in remaining if i not in set(leaders)]
    followers = [followers[i] for i in rng.permutation(len(followers))]

    committees = []
    per = params.c - 1
    for k in range(params.m):
        members = set(followers[k * per: (k + 1) * per])
        members.add(leader_order[k])
        partial = draw_partial_set(members, leader_order[k], params.lam, rng)
        committees.append(
            Committee(members=frozenset(members), leader=leader_order[k], partial_set=partial)
        )
    return CommitteeConfig(round=0, referee=referee, committees=tuple(committees))


def ecfr_step(config: CommitteeConfig, params: SystemParams, seed):
    """One round of alpha-ECFR.

    Every non-leader, non-referee node is marked independently with
    probability params.alpha; the marked pool is dealt back into the vacated
    slots by a uniform permutation. Partial sets are re-drawn from the new
    membership. Returns (new_config, marked_ids).
    """
    rng = _rng(seed)
    alpha = params.alpha

    eligible_by_committee = []
    for committee in config.committees:
        eligible_by_committee.append(sorted(committee.members - {committee.leader}))

    marked = []
    kept = []
    vacancies = []
    for members in eligible_by_committee:
        members = np.asarray(members, dtype=np.int64)
        mask = rng.random(len(members)) < alpha
        marked.extend(int(i) for i in members[mask])
        kept.append([int(i) for i in members[~mask]])
        vacancies.append(int(mask.sum()))

    # Deal the pooled marked nodes slot-by-slot: slot list repeats each
    # committee index by its vacancy count, pool order is a uniform shuffle.
    slots = np.repeat(np.arange(params.m), vacancies)
    pool = np.asarray(marked, dtype=np.int64)
    if len(pool):
        pool = pool[rng.permutation(len(pool))]

    new_committees = []
    for k, committee in enumerate(config.committees):
        members = set(kept[k])
        members.add(committee.leader)
        members.update(int(i) for i in pool[slots == k])
        members = frozenset(members)
        if members == committee.members:
            partial = committee.partial_set
        else:
            partial = draw_partial_set(members, committee.leader, params.lam, rng)
        new_committees.append(
            Committee(members=members, leader=committee.leader, partial_set=partial)
        )

    new_config = CommitteeConfig(
        round=config.round + 1, referee=config.referee, committees=tuple(new_committees)
    )
    return new_config, frozenset(marked)


def alpha_for_beta(beta: float, d: int) -> float:
    """Marking probability alpha with white fraction target beta = (1-alpha^2)^d."""
    if not (0.0 < beta < 1.0):
        raise ValueError("beta must lie strictly inside (0, 1)")
    if d < 1:
        raise ValueError("d must be a positive integer")
    return math.sqrt(1.0 - beta ** (1.0 / d))


def majority_bound_value(f: float, beta: float) -> float:
    """Upper bound on the malicious fraction of a committee after mixing."""
    return beta + f * (1.0 + beta) ** 2 * (1.0 - beta)


def theorem_predicate(f: float, beta: float) -> bool:
    """True iff the post-reshuffle malicious-fraction bound stays below 1/2."""
    if not (0.0 <= f < 1.0):
        raise ValueError("f must lie in [0, 1)")
    if not (0.0 < beta < 1.0):
        raise ValueError("beta must lie strictly inside (0, 1)")
    return majority_bound_value(f, beta) < 0.5
