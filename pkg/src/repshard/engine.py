"""End-to-end round loop: resources, ingestion, committees, metrics.

Two execution paths share the same scoring and selection rules:

* ``run_simulation`` / ``run_comparison`` is the vectorized
  honest-evaluation loop used for the scheme-comparison studies. All nodes
  follow the protocol, every listed transaction is genuinely verifiable by
  an honest supermajority, so the committee decision equals ground-truth
  validity of the listed transactions and the budget-limited vote vectors
  feed the scores only. Committees are re-split uniformly every round.

* ``play_protocol_round`` is the object-level protocol round with the full
  semi-commitment exchange, witness and accusation paths and message
  accounting. Adversarial studies and the complexity-order checks use it.
  Committee formation defaults to a fresh bootstrap; multi-round callers
  exercising marked-node reshuffling pass ``config`` chained through
  ``reshuffle.ecfr_step`` instead.

Determinism: every random quantity derives from the config seed through
named substreams, so identical configs produce byte-identical CSV output.
"""

from __future__ import annotations

import csv
import json
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from . import committee as proto
from .committee import (
    HONEST,
    MessageCounters,
    PHASE_VOTING,
    VList,
    accuse_and_reselect,
    build_invalid_tx_witness,
    cast_vote,
    intra_committee_consensus,
    propose_txlist,
    run_semi_commitment_exchange,
)
from .model import (
    Committee,
    CommitteeConfig,
    Node,
    SignatureRegistry,
    SystemParams,
    digest,
    encode_u64,
)
from .reputation import (
    distribute_rewards,
    map_reputation_array,
    majority_decide,
    score_member,
    update_reputations,
)
from .reshuffle import bootstrap
from .sharding import default_input_distribution

SCHEME_REPUTATION = "reputation"
SCHEME_RANDOM = "random"
SCHEME_BOTH = "both"
SCHEMES = (SCHEME_REPUTATION, SCHEME_RANDOM, SCHEME_BOTH)

METRICS_HEADER = (
    "round,scheme,leader_resource_ratio,txs_processed,cumulative_txs,"
    "evictions,msgs_leader,msgs_member,msgs_referee"
)


class ConfigError(ValueError):
    """A simulation config field is missing or out of range."""


@dataclass(frozen=True)
class ResourceDist:
    a: float = 1.0
    b: float = 7.0
    scale: float = 100.0

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0 or self.scale <= 0:
            raise ConfigError("resource_dist: a, b and scale must be positive")


@dataclass(frozen=True)
class TxSource:
    kind: str = "synthetic"
    per_round: int = 500
    distribution: str | None = None
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ("synthetic", "trace"):
            raise ConfigError("tx_source.type must be 'synthetic' or 'trace'")
        if self.kind == "synthetic" and self.per_round < 0:
            raise ConfigError("tx_source.per_round must be >= 0")
        if self.kind == "trace" and not self.path:
            raise ConfigError("tx_source.path is required for trace input")


@dataclass(frozen=True)
class AdversaryConfig:
    f: float = 0.0
    d: int = 1
    behaviors: tuple = ()

    def __post_init__(self):
        if not (0.0 <= self.f < 1.0):
            raise ConfigError("adversary.f must lie in [0, 1)")
        if self.d < 1:
            raise ConfigError("adversary.d must be >= 1")


@dataclass(frozen=True)
class SimConfig:
    params: SystemParams
    rounds: int = 100
    scheme: str = SCHEME_REPUTATION
    resource_dist: ResourceDist = field(default_factory=ResourceDist)
    tx_source: TxSource = field(default_factory=TxSource)
    adversary: AdversaryConfig = field(default_factory=AdversaryConfig)
    total_reward_per_round: float = 100.0
    seed: int = 0

    def __post_init__(self):
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}")
        if self.total_reward_per_round <= 0:
            raise ConfigError("total_reward_per_round must be positive")


def sim_config_from_dict(doc: dict) -> SimConfig:
    """Build a SimConfig from a parsed JSON document, naming bad fields."""
    try:
        p = doc["params"]
    except KeyError:
        raise ConfigError("params: section missing") from None
    try:
        params = SystemParams(
            n=int(p["n"]), m=int(p["m"]), c=int(p["c"]), lam=int(p.get("lambda", p.get("lam", 1))),
            f=float(p.get("f", 0.0)), alpha=float(p.get("alpha", 0.5)),
            d=int(p.get("d", 1)), sigma=float(p.get("sigma", 0.1)),
            omega=float(p.get("omega", 0.5)), p_l=float(p.get("p_l", 0.7)),
            p_m=float(p.get("p_m", 0.9)),
        )
    except KeyError as exc:
        raise ConfigError(f"params.{exc.args[0]}: missing") from None
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from None

    rd = doc.get("resource_dist", {})
    ts = doc.get("tx_source", {})
    adv = doc.get("adversary", {})
    try:
        return SimConfig(
            params=params,
            rounds=int(doc.get("rounds", 100)),
            scheme=str(doc.get("scheme", SCHEME_REPUTATION)),
            resource_dist=ResourceDist(
                a=float(rd.get("a", 1.0)), b=float(rd.get("b", 7.0)),
                scale=float(rd.get("scale", 100.0)),
            ),
            tx_source=TxSource(
                kind=str(ts.get("type", "synthetic")),
                per_round=int(ts.get("per_round", 500)),
                distribution=ts.get("distribution"),
                path=ts.get("path"),
            ),
            adversary=AdversaryConfig(
                f=float(adv.get("f", 0.0)), d=int(adv.get("d", 1)),
                behaviors=tuple(adv.get("behaviors", ())),
            ),
            total_reward_per_round=float(doc.get("total_reward_per_round", 100.0)),
            seed=int(doc.get("seed", 0)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_sim_config(path) -> SimConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return sim_config_from_dict(doc)


def sample_resources(n: int, a: float, b: float, scale: float, seed) -> np.ndarray:
    """n i.i.d. draws of scale * Beta(a, b); zero draws are re-sampled."""
    if min(a, b, scale) <= 0:
        raise ValueError("a, b and scale must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    out = scale * rng.beta(a, b, size=n)
    while True:
        zero = out <= 0.0
        if not zero.any():
            return out
        out[zero] = scale * rng.beta(a, b, size=int(zero.sum()))


def synth_tx_id(seed: int, index: int) -> bytes:
    return digest(b"tx" + encode_u64(seed) + encode_u64(index))


@dataclass
class Arrival:
    """One incoming transaction, reduced to what routing and voting need."""

    tx_id: bytes
    n_inputs: int
    valid: bool


def synthesize_arrivals(rounds: int, per_round: int,
                        dist: InputCountDistribution, seed: int):
    """Per-round arrival lists with ids derived from (seed, index)."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xA881)))
    out = []
    index = 0
    for _ in range(rounds):
        ks = dist.sample(rng, per_round)
        batch = []
        for k in ks:
            batch.append(Arrival(tx_id=synth_tx_id(seed, index), n_inputs=int(k), valid=True))
            index += 1
        out.append(batch)
    return out


def load_trace_arrivals(path, rounds: int):
    """Read ``round,tx_id,n_inputs,valid`` rows grouped per round."""
    out = [[] for _ in range(rounds)]
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = {"round", "tx_id", "n_inputs", "valid"}
        if reader.fieldnames is None or expected - set(reader.fieldnames):
            raise ValueError(f"{path}: expected header 'round,tx_id,n_inputs,valid'")
        for lineno, row in enumerate(reader, start=2):
            try:
                r = int(row["round"])
                arrival = Arrival(
                    tx_id=bytes.fromhex(row["tx_id"]),
                    n_inputs=int(row["n_inputs"]),
                    valid=row["valid"].strip() == "1",
                )
            except (ValueError, KeyError) as exc:
                raise ValueError(f"{path}: bad trace row at line {lineno}: {exc}") from None
            if 0 <= r < rounds:
                out[r].append(arrival)
    return out


def route_to_shards(arrivals, m: int, scheme=None):
    """Deal a round's arrivals into per-shard queues.

    Default routing is the transaction hash modulo m; passing a
    ShardingScheme switches to its assignment rule instead.
    """
    queues = [[] for _ in range(m)]
    if scheme is None:
        for arrival in arrivals:
            queues[int.from_bytes(arrival.tx_id, "big") % m].append(arrival)
    else:
        from .sharding import assign_shard

        for arrival in arrivals:
            queues[assign_shard(arrival.tx_id, scheme)].append(arrival)
    return queues


@dataclass
class RoundMetrics:
    round: int
    scheme: str
    leader_resource_ratio: float
    txs_processed: int
    cumulative_txs: int
    evictions: int
    msgs_leader: int
    msgs_member: int
    msgs_referee: int

    def csv_row(self) -> str:
        return (
            f"{self.round},{self.scheme},{self.leader_resource_ratio!r},"
            f"{self.txs_processed},{self.cumulative_txs},{self.evictions},"
            f"{self.msgs_leader},{self.msgs_member},{self.msgs_referee}"
        )


def write_metrics_csv(path, metrics) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(METRICS_HEADER + "\n")
        for m in metrics:
            fh.write(m.csv_row() + "\n")


@dataclass
class SimResult:
    scheme: str
    metrics: list
    reputations: np.ndarray
    resources: np.ndarray
    cumulative_rewards: np.ndarray

    @property
    def cumulative_txs(self) -> int:
        return self.metrics[-1].cumulative_txs if self.metrics else 0


def build_arrivals(config: SimConfig) -> list:
    """Materialize the per-round arrival lists named by the tx_source."""
    if config.tx_source.kind == "trace":
        return load_trace_arrivals(config.tx_source.path, config.rounds)
    dist = config.tx_source.distribution
    if dist is None:
        dist = default_input_distribution()
    elif isinstance(dist, str):
        from .sharding import load_input_distribution

        dist = load_input_distribution(dist)
    return synthesize_arrivals(
        config.rounds, config.tx_source.per_round, dist, config.seed
    )


def run_simulation(config: SimConfig, resources: np.ndarray | None = None,
                   arrivals: list | None = None) -> SimResult:
    """Vectorized honest-evaluation round loop for one leader-selection scheme.

    Every round: uniform re-split into m committees, leader choice per the
    scheme, leader proposal bounded by its p_l budget, budget-limited member
    votes scored against the committee decision (ground-truth validity of
    the listed transactions), reputation update and proportional reward
    distribution. Returns per-round metrics plus final state.
    """
    params = config.params
    n, m = params.n, params.m
    if config.scheme == SCHEME_BOTH:
        raise ConfigError("scheme: run_comparison handles 'both'")
    if n % m:
        raise ConfigError("params: n must be divisible by m for the round loop")

    ss = np.random.SeedSequence((config.seed, 0x51E))
    res_rng, split_rng, lead_rng = (np.random.default_rng(s) for s in ss.spawn(3))

    if resources is None:
        resources = sample_resources(
            n, config.resource_dist.a, config.resource_dist.b,
            config.resource_dist.scale, res_rng,
        )
    if arrivals is None:
        arrivals = build_arrivals(config)

    top_m_mean = float(np.sort(resources)[-m:].mean())
    reputations = np.zeros(n)
    cumulative_rewards = np.zeros(n)
    ids = np.arange(n)
    queues = [deque() for _ in range(m)]

    sigma, omega, p_l, p_m = params.sigma, params.omega, params.p_l, params.p_m
    c_sim = n // m  # committee size in the referee-less evaluation split
    msgs_member = 4 * c_sim + 3   # list + vote + score list + two consensus runs
    msgs_leader = 7 * c_sim - 3
    metrics = []
    cumulative = 0

    for r in range(1, config.rounds + 1):
        for shard, batch in enumerate(route_to_shards(arrivals[r - 1], m)):
            queues[shard].extend(batch)

        if config.scheme == SCHEME_REPUTATION:
            order = np.lexsort((ids, -reputations))
            leaders = order[:m]
            leaders = leaders[lead_rng.permutation(m)]
            pool = np.setdiff1d(ids, leaders, assume_unique=False)
            pool = pool[split_rng.permutation(len(pool))]
            member_groups = pool.reshape(m, c_sim - 1)
        else:
            perm = split_rng.permutation(ids)
            groups = perm.reshape(m, c_sim)
            leaders = groups[:, 0].copy()
            member_groups = groups[:, 1:]

        processed = 0
        for k in range(m):
            leader = int(leaders[k])
            budget = p_l * resources[leader]
            queue = queues[k]
            costs = []
            spent = 0.0
            while queue:
                arrival = queue[0]
                if not arrival.valid:
                    queue.popleft()  # honest leader drops invalid submissions
                    continue
                if spent + arrival.n_inputs > budget:
                    break
                spent += arrival.n_inputs
                costs.append(arrival.n_inputs)
                queue.popleft()
            d = len(costs)
            if d == 0:
                continue
            listcost = np.cumsum(costs)
            members = member_groups[k]
            caps = p_m * resources[members]
            j = np.searchsorted(listcost, caps, side="right")
            scores = np.where(j > 0, np.sqrt(j.astype(float) * d), 0.0)
            scores += np.where(j == d, sigma * d, 0.0)
            reputations[members] += scores
            reputations[leader] += d + sigma * d - omega / d
            processed += d

        lead_res = float(resources[leaders].mean())
        weights = map_reputation_array(reputations)
        cumulative_rewards += config.total_reward_per_round * weights / weights.sum()
        cumulative += processed
        metrics.append(
            RoundMetrics(
                round=r, scheme=config.scheme,
                leader_resource_ratio=lead_res / top_m_mean,
                txs_processed=processed, cumulative_txs=cumulative,
                evictions=0, msgs_leader=msgs_leader, msgs_member=msgs_member,
                msgs_referee=0,
            )
        )

    return SimResult(
        scheme=config.scheme, metrics=metrics, reputations=reputations,
        resources=resources, cumulative_rewards=cumulative_rewards,
    )


def run_comparison(config: SimConfig) -> dict:
    """Run both schemes on identical resources, arrivals and split streams."""
    ss = np.random.SeedSequence((config.seed, 0x51E))
    res_rng = np.random.default_rng(ss.spawn(3)[0])
    resources = sample_resources(
        config.params.n, config.resource_dist.a, config.resource_dist.b,
        config.resource_dist.scale, res_rng,
    )
    arrivals = build_arrivals(config)

    results = {}
    for scheme in (SCHEME_REPUTATION, SCHEME_RANDOM):
        cfg = SimConfig(
            params=config.params, rounds=config.rounds, scheme=scheme,
            resource_dist=config.resource_dist, tx_source=config.tx_source,
            adversary=config.adversary,
            total_reward_per_round=config.total_reward_per_round,
            seed=config.seed,
        )
        results[scheme] = run_simulation(cfg, resources=resources, arrivals=arrivals)
    return results


def cumulative_ratio_series(results: dict) -> list:
    """Per-round reputation/random cumulative transaction ratio."""
    rep = results[SCHEME_REPUTATION].metrics
    ran = results[SCHEME_RANDOM].metrics
    out = []
    for a, b in zip(rep, ran):
        out.append((a.round, a.cumulative_txs / b.cumulative_txs if b.cumulative_txs else float("nan")))
    return out


# ---------------------------------------------------------------------------
# Object-level protocol round (adversarial studies, message accounting)
# ---------------------------------------------------------------------------


@dataclass
class ProtocolRoundResult:
    config: CommitteeConfig
    accepted: dict
    invalid_accepted: int
    evictions: list
    honest_evictions: int
    liveness: bool
    counters: MessageCounters
    reputations: dict
    rewards: dict
    undetected_forgeries: int


def build_roster(params: SystemParams, resources, corrupted_ids, round_no: int = 0) -> dict:
    corrupted = set(corrupted_ids)
    return {
        i: Node(
            id=i, honest=i not in corrupted, resource=float(resources[i]),
            corrupted_at=0 if i in corrupted else None,
        )
        for i in range(params.n)
    }


def force_secure_bootstrap(roster, params: SystemParams, seed,
                           reputations=None, attempts: int = 1000):
    """Bootstrap a secure round: honest-majority referee and committees plus
    at least one honest supervisor per partial set (the conditioned ensemble
    the safety and liveness claims quantify over)."""
    nodes = _nodes_with_reputation(roster, reputations)
    base = np.random.SeedSequence((seed, 0xF0))
    for child in base.spawn(attempts):
        rng = np.random.default_rng(child)
        config = bootstrap(nodes, params, rng)
        honest_ref = sum(1 for i in config.referee if roster[i].honest)
        if params.has_referee and honest_ref <= params.c / 2:
            continue
        if any(
            sum(roster[i].honest for i in c.members) <= params.c / 2
            for c in config.committees
        ):
            continue
        if all(
            any(roster[i].honest for i in c.partial_set) for c in config.committees
        ):
            return config
    raise RuntimeError("could not draw a conditioned configuration; f too high?")


def _nodes_with_reputation(roster, reputations):
    """Node views carrying the live reputation values for leader choice."""
    if reputations is None:
        return list(roster.values())
    return [replace(node, reputation=reputations[i]) for i, node in roster.items()]


def play_protocol_round(roster, params: SystemParams, reputations, seed,
                        behaviors=None, pending=None, round_no: int = 0,
                        config: CommitteeConfig | None = None,
                        force_secure: bool = True,
                        total_reward: float = 100.0) -> ProtocolRoundResult:
    """One full protocol round at the object level.

    Semi-commitment exchange with recovery, leader proposal, budgeted votes,
    strict-majority decision, intra-committee consensus, invalid-proposal
    witnesses and accusation handling, then reputation updates. Behaviors
    default to honest; ``pending`` maps committee index to its shard queue.
    """
    behaviors = dict(behaviors or {})
    reputations = dict(reputations)
    counters = MessageCounters()
    registry = SignatureRegistry(roster)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x90B)))

    if config is None:
        if force_secure:
            config = force_secure_bootstrap(roster, params, seed, reputations)
        else:
            config = bootstrap(_nodes_with_reputation(roster, reputations), params, rng)
    pending = pending or {}

    committees = list(config.committees)
    evictions = []
    honest_evictions = 0

    tx_lookup = {}
    for txs in pending.values():
        for tx in txs:
            tx_lookup[tx.tx_id] = tx

    def evict(k: int, witness, prosecutor) -> bool:
        nonlocal honest_evictions
        committee_k = committees[k]
        outcome = accuse_and_reselect(
            committee_k, witness, prosecutor, roster, registry,
            [roster[i] for i in sorted(config.referee)], reputations,
            behaviors, counters, tx_lookup=tx_lookup,
        )
        if not outcome.evicted:
            return False
        accused = witness.accused
        reputations[accused] = outcome.punished_reputation
        if roster[accused].honest:
            honest_evictions += 1
        members = committee_k.members - {accused}
        partial = committee_k.partial_set - {accused}
        committees[k] = Committee(
            members=members, leader=outcome.new_leader, partial_set=partial
        )
        evictions.append((k, accused))
        return True

    # Semi-commitment exchange, repeated per committee until it registers.
    max_rounds = max(len(c.members) for c in committees) if committees else 1
    outcomes = {}
    for _ in range(max_rounds):
        probe = CommitteeConfig(round_no, config.referee, tuple(committees))
        outcomes = run_semi_commitment_exchange(
            probe, roster, registry, behaviors, counters
        )
        acted = False
        for k, outcome in outcomes.items():
            if outcome.witness is not None and evict(k, outcome.witness, outcome.accuser):
                acted = True
        if not acted:
            break
    undetected = sum(1 for o in outcomes.values() if o.forged_undetected)

    # Voting phase per committee.
    accepted = {}
    invalid_accepted = 0
    liveness = True
    for k, committee_k in enumerate(committees):
        leader_id = committee_k.leader
        leader = roster[leader_id]
        behavior = behaviors.get(leader_id, HONEST)
        queue = list(pending.get(k, ()))
        txlist = propose_txlist(leader, queue, params.p_l, round_no, behavior)
        payload = txlist.serialize()
        sig = registry.sign(leader_id, payload)

        members = sorted(committee_k.members)
        c_now = len(members)
        counters.add(leader_id, PHASE_VOTING, sent=c_now - 1)
        counters.add_many((i for i in members if i != leader_id), PHASE_VOTING, received=1)

        votes = {}
        for i in members:
            node = roster[i]
            p = params.p_l if i == leader_id else params.p_m
            votes[i] = cast_vote(node, txlist, p, behaviors.get(i, HONEST))
            counters.add(i, PHASE_VOTING, sent=1)
            counters.add(leader_id, PHASE_VOTING, received=1)

        if txlist.txs:
            decision, accepted_idx = majority_decide(list(votes.items()), params.c)
        else:
            decision, accepted_idx = (), set()
        accepted[k] = [txlist.txs[i].tx_id for i in sorted(accepted_idx)]
        invalid_accepted += sum(
            1 for i in accepted_idx if not txlist.txs[i].valid
        )

        member_nodes = [roster[i] for i in members]
        agreed, _ = intra_committee_consensus(
            member_nodes, payload + VList(votes).serialize(), counters, PHASE_VOTING
        )
        liveness = liveness and agreed

        # Score everyone against the agreed decision.
        if txlist.txs:
            scores = {}
            for i in members:
                scores[i] = score_member(
                    votes[i], decision, i == committee_k.leader,
                    params.sigma, params.omega,
                )
            reputations = update_reputations(reputations, scores)

        # Phase 2 consensus on the score list.
        counters.add(committee_k.leader, PHASE_VOTING, sent=c_now - 1)
        counters.add_many(
            (i for i in members if i != committee_k.leader), PHASE_VOTING, received=1
        )
        agreed, _ = intra_committee_consensus(
            member_nodes, payload, counters, PHASE_VOTING
        )
        liveness = liveness and agreed

        # Partial-set supervision: a signed proposal containing an invalid
        # transaction is witnessable by any honest watcher that verified it.
        witness = build_invalid_tx_witness(txlist, sig, registry)
        if witness is not None:
            idx = [t.tx_id for t in txlist.txs].index(witness.reference)
            for w in sorted(committee_k.partial_set):
                if roster[w].honest and votes[w][idx] != 0:
                    evict(k, witness, w)
                    break

    # Fabricated accusations from malicious partial members (framing test).
    for k, committee_k in enumerate(committees):
        for i in sorted(committee_k.partial_set):
            if behaviors.get(i, HONEST).false_accuse and not roster[i].honest:
                witness = proto.fabricate_witness(i, committee_k.leader, registry)
                evict(k, witness, i)
                break

    # Rewards go to every working-committee node; referee reputations stay
    # frozen for their service round.
    working = {i: reputations[i] for c in committees for i in c.members}
    for _, accused in evictions:
        working.setdefault(accused, reputations[accused])
    rewards = distribute_rewards(working, total_reward) if working else {}

    final = CommitteeConfig(round_no, config.referee, tuple(committees))
    return ProtocolRoundResult(
        config=final, accepted=accepted, invalid_accepted=invalid_accepted,
        evictions=evictions, honest_evictions=honest_evictions,
        liveness=liveness, counters=counters, reputations=reputations,
        rewards=rewards, undetected_forgeries=undetected,
    )
