"""Vote aggregation, scoring, reward mapping and leader selection.

A vote vector holds one entry per listed transaction: +1 (Yes), -1 (No) or
0 (Unknown). The committee decision accepts a transaction only on a strict
majority of Yes votes over the full committee size, and the resulting
decision vector never contains zeros. Scores are the vote's cosine
similarity against the decision, scaled by the number of transactions, plus
a perfect-vote bonus that is slightly smaller for the leader.
"""

from __future__ import annotations

import math

import numpy as np

VOTE_YES = 1
VOTE_NO = -1
VOTE_UNKNOWN = 0


def majority_decide(votes, c: int):
    """Aggregate vote vectors into the committee decision.

    ``votes`` is a list of (node_id, vote_vector) pairs; absent members are
    simply not in the list and count as voting Unknown everywhere.
    Transaction k is accepted iff strictly more than c/2 votes are Yes.
    Returns (decision_vector, accepted_indices).
    """
    if not votes:
        raise ValueError("need at least one vote vector")
    lengths = {len(v) for _, v in votes}
    if len(lengths) != 1:
        raise ValueError(f"ragged vote vectors: lengths {sorted(lengths)}")
    if len(votes) > c:
        raise ValueError(f"{len(votes)} votes for a committee of size {c}")
    d = lengths.pop()
    decision = []
    accepted = set()
    for k in range(d):
        yes = sum(1 for _, v in votes if v[k] == VOTE_YES)
        if yes > c / 2:
            decision.append(VOTE_YES)
            accepted.add(k)
        else:
            decision.append(VOTE_NO)
    return tuple(decision), accepted


def vote_cosine(v, u) -> float:
    """Cosine similarity between a vote vector and the decision vector.

    Defined as 0 for the all-Unknown vote (an absent or uninformative voter
    neither gains nor loses).
    """
    if len(v) != len(u):
        raise ValueError("vote and decision vectors differ in length")
    if len(v) == 0:
        raise ValueError("empty vote vector")
    dot = sum(int(a) * int(b) for a, b in zip(v, u))
    nv = math.sqrt(sum(int(a) * int(a) for a in v))
    nu = math.sqrt(sum(int(b) * int(b) for b in u))
    if nv == 0.0:
        return 0.0
    return dot / (nv * nu)


def score_member(v, u, is_leader: bool, sigma: float, omega: float) -> float:
    """Score one member's vote against the committee decision.

    score = D * cos(v, u) + bonus, where the bonus rewards an exactly
    matching vote: sigma*D for a member, sigma*D - omega/D for the leader.
    The leader discount shrinks as lists grow, so a strong leader is not
    endlessly displaced by its own committee.
    """
    d = len(u)
    if len(v) != d:
        raise ValueError("vote and decision vectors differ in length")
    if d == 0:
        raise ValueError("empty decision vector")
    # Exact-match test in integers; avoids calling cos == 1.0 on floats.
    perfect = all(int(a) == int(b) for a, b in zip(v, u))
    score = d * vote_cosine(v, u)
    if perfect:
        score += sigma * d - (omega / d if is_leader else 0.0)
    return score


def map_reputation(x: float) -> float:
    """Map a (possibly negative) reputation to a strictly positive weight.

    exp(x) below zero, 1 + ln(x+1) above; both branches meet at g(0) = 1 and
    the map is continuous and strictly increasing everywhere.
    """
    if x <= 0:
        return math.exp(x)
    return 1.0 + math.log1p(x)


def map_reputation_array(x: np.ndarray) -> np.ndarray:
    """Vectorized map_reputation for the round loop."""
    x = np.asarray(x, dtype=float)
    return np.where(x <= 0, np.exp(np.minimum(x, 0.0)), 1.0 + np.log1p(np.maximum(x, 0.0)))


def distribute_rewards(reputations, total_reward: float) -> dict:
    """Split a round's reward proportionally to mapped reputation."""
    if total_reward <= 0:
        raise ValueError("total_reward must be positive")
    if not reputations:
        raise ValueError("no nodes to reward")
    weights = {i: map_reputation(r) for i, r in reputations.items()}
    denom = sum(weights.values())
    return {i: total_reward * w / denom for i, w in weights.items()}


def punish_leader(rep: float) -> float:
    """Sign-preserving cube root of the reputation.

    Faithful to the protocol's rule even where it is gentle: reputations in
    (0, 1) actually increase under the cube root.
    """
    return math.copysign(abs(rep) ** (1.0 / 3.0), rep)


def select_leaders(reputations, eligible, m: int, seed) -> dict:
    """Pick the m highest-reputation eligible nodes and deal them to committees.

    Ties break toward the smaller node id; committee assignment is a uniform
    random permutation of the selected set. Returns {committee_index: node_id}.
    """
    eligible = sorted(eligible)
    if len(eligible) < m:
        raise ValueError(f"only {len(eligible)} eligible nodes for {m} leaders")
    ranked = sorted(eligible, key=lambda i: (-reputations[i], i))[:m]
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    order = rng.permutation(m)
    return {int(k): ranked[order[k]] for k in range(m)}


def update_reputations(reputations, scores) -> dict:
    """Add this round's scores onto the reputation map; unscored nodes keep theirs."""
    unknown = set(scores) - set(reputations)
    if unknown:
        raise ValueError(f"scores for unknown nodes: {sorted(unknown)[:8]}")
    out = dict(reputations)
    for i, s in scores.items():
        out[i] = out[i] + s
    return out
