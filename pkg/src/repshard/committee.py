"""One committee's round machinery.

Leader proposal under a resource budget, member voting, the honest-majority
consensus oracle standing in for intra-committee BFT, semi-commitment
exchange with the referee committee, witness construction and the
accusation / leader re-selection path.

Misbehavior is expressed through per-node :class:`Behavior` flags rather
than subclasses, so adversarial tests can mix strategies freely. All byte
encodings are fixed (8-byte big-endian ids, length prefixes) so digests are
reproducible bit-exactly.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from .model import (
    Committee,
    CommitteeConfig,
    Node,
    SimSignature,
    SignatureRegistry,
    digest,
    encode_member_list,
    encode_u64,
)
from .reputation import VOTE_NO, VOTE_UNKNOWN, VOTE_YES, punish_leader

PHASE_SEMI_COMMITMENT = "semi_commitment"
PHASE_VOTING = "voting"
PHASE_ACCUSATION = "accusation"

WITNESS_LIST_MISMATCH = "member-list-mismatch"
WITNESS_INVALID_TX = "invalid-tx-proposal"


@dataclass(frozen=True)
class Behavior:
    """Per-node misbehavior flags; the default instance is fully honest."""

    forge_member_list: bool = False   # leader circulates a forged member list
    propose_invalid: bool = False     # leader includes invalid transactions
    propose_empty: bool = False       # leader proposes nothing
    invert_votes: bool = False        # member votes against ground truth
    vote_unknown: bool = False        # member abstains on everything
    false_accuse: bool = False        # partial member fabricates a witness
    reject_witness: bool = False      # member votes down any impeachment


HONEST = Behavior()


class MessageCounters:
    """Per-node, per-phase message and storage accounting.

    Counters only ever increase within a round; `messages` is the sent +
    received total used by the complexity-order checks.
    """

    def __init__(self):
        self._data = defaultdict(lambda: [0, 0, 0])

    def add(self, node, phase, sent=0, received=0, stored=0):
        entry = self._data[(node, phase)]
        entry[0] += sent
        entry[1] += received
        entry[2] += stored

    def add_many(self, nodes, phase, sent=0, received=0, stored=0):
        for node in nodes:
            self.add(node, phase, sent, received, stored)

    def sent(self, node, phase) -> int:
        return self._data[(node, phase)][0]

    def received(self, node, phase) -> int:
        return self._data[(node, phase)][1]

    def stored(self, node, phase) -> int:
        return self._data[(node, phase)][2]

    def messages(self, node, phase) -> int:
        entry = self._data[(node, phase)]
        return entry[0] + entry[1]

    def phase_messages(self, nodes, phase) -> int:
        return sum(self.messages(n, phase) for n in nodes)


@dataclass(frozen=True)
class TXList:
    """A leader's ordered transaction proposal for one round."""

    proposer: int
    txs: tuple
    round: int

    def __post_init__(self):
        object.__setattr__(self, "txs", tuple(self.txs))

    def serialize(self) -> bytes:
        head = encode_u64(self.round) + encode_u64(self.proposer) + encode_u64(len(self.txs))
        return head + b"".join(tx.tx_id for tx in self.txs)

    def total_cost(self) -> float:
        return float(sum(tx.cost for tx in self.txs))


@dataclass(frozen=True)
class VList:
    """Collected vote vectors, one per committee member (absentees all-Unknown)."""

    votes: dict

    def serialize(self) -> bytes:
        parts = []
        for node in sorted(self.votes):
            vec = self.votes[node]
            parts.append(encode_u64(node) + encode_u64(len(vec)))
            parts.append(bytes((v + 1) for v in vec))
        return b"".join(parts)


@dataclass(frozen=True)
class SemiCommitment:
    committee_index: int
    commitment: bytes
    member_list: tuple

    def __post_init__(self):
        object.__setattr__(self, "member_list", tuple(self.member_list))


@dataclass(frozen=True)
class Witness:
    """A leader-signed message paired with a reference that contradicts it.

    For a member-list mismatch the reference is the committee's true
    membership digest; for an invalid-transaction proposal it is the
    offending transaction id inside the signed list.
    """

    kind: str
    accused: int
    payload: bytes
    signature: SimSignature
    reference: bytes


def compute_semi_commitment(member_ids) -> bytes:
    """Digest of the canonical (sorted, 8-byte big-endian) member encoding."""
    ids = list(member_ids)
    if not ids:
        raise ValueError("cannot commit to an empty member list")
    return digest(encode_member_list(ids))


def verify_witness(witness: Witness, registry: SignatureRegistry, tx_lookup=None) -> bool:
    """Decide whether a witness actually proves leader misbehavior.

    Requires the leader's own signature on the payload plus a derivable rule
    violation; anything else (including a fabricated payload) is invalid.
    """
    if not registry.verify(witness.signature, witness.accused, witness.payload):
        return False
    if witness.kind == WITNESS_LIST_MISMATCH:
        return digest(witness.payload) != witness.reference
    if witness.kind == WITNESS_INVALID_TX:
        if tx_lookup is None:
            return False
        tx = tx_lookup.get(witness.reference)
        if tx is None or tx.valid:
            return False
        # The offending id must actually sit inside the signed list payload.
        body = witness.payload[24:]
        ids = {body[i: i + 32] for i in range(0, len(body), 32)}
        return witness.reference in ids
    return False


def propose_txlist(leader: Node, pending, p_l: float, round_no: int = 0,
                   behavior: Behavior = HONEST) -> TXList:
    """Build the leader's proposal from the shard's pending queue.

    An honest leader verifies transactions in arrival order and includes the
    valid ones while their cumulative cost fits its p_l budget. Flags let a
    malicious leader include invalid transactions or propose nothing.
    """
    if behavior.propose_empty:
        return TXList(proposer=leader.id, txs=(), round=round_no)
    budget = p_l * leader.resource
    picked = []
    spent = 0.0
    for tx in pending:
        if not tx.valid and not behavior.propose_invalid:
            continue
        if spent + tx.cost > budget:
            break
        picked.append(tx)
        spent += tx.cost
    return TXList(proposer=leader.id, txs=tuple(picked), round=round_no)


def cast_vote(member: Node, txlist: TXList, p: float,
              behavior: Behavior = HONEST) -> tuple:
    """One member's vote vector over the proposed list.

    Honest voters verify in list order while the cumulative cost fits their
    budget (p * resource): Yes for valid, No for invalid, Unknown past the
    budget. Inverting voters contradict ground truth everywhere; abstainers
    return all-Unknown.
    """
    d = len(txlist.txs)
    if behavior.vote_unknown:
        return (VOTE_UNKNOWN,) * d
    if behavior.invert_votes:
        return tuple(VOTE_NO if tx.valid else VOTE_YES for tx in txlist.txs)
    budget = p * member.resource
    votes = []
    spent = 0.0
    for pos, tx in enumerate(txlist.txs):
        if spent + tx.cost > budget:
            # Out of budget: everything from here on stays Unknown.
            votes.extend([VOTE_UNKNOWN] * (d - pos))
            break
        spent += tx.cost
        votes.append(VOTE_YES if tx.valid else VOTE_NO)
    return tuple(votes)


def intra_committee_consensus(members, payload: bytes,
                              counters: MessageCounters | None = None,
                              phase: str = PHASE_VOTING):
    """Honest-majority consensus oracle standing in for intra-committee BFT.

    Agreement succeeds iff strictly more than half the participants are
    honest, and the agreed payload is byte-identical to the input. Each
    participant broadcasts to the whole committee, so counters grow by c
    sent and c received per head.
    """
    members = list(members)
    c = len(members)
    if counters is not None:
        for node in members:
            counters.add(node.id, phase, sent=c, received=c, stored=len(payload))
    honest = sum(1 for n in members if n.honest)
    if honest > c / 2:
        return True, payload
    return False, None


@dataclass
class ExchangeOutcome:
    """Per-committee result of the semi-commitment exchange."""

    committee_index: int
    registered: bool
    commitment: bytes | None = None
    witness: Witness | None = None
    accuser: int | None = None
    forged_undetected: bool = False


def _forged_member_list(committee: Committee, all_ids) -> list:
    """A forged list: one non-leader member swapped for a registered outsider."""
    members = sorted(committee.members)
    outsiders = sorted(set(all_ids) - committee.members)
    if not outsiders:
        raise ValueError("no outsider available to forge with")
    victim = max(i for i in members if i != committee.leader)
    return sorted(set(members) - {victim} | {outsiders[0]})


def run_semi_commitment_exchange(config: CommitteeConfig, roster,
                                 registry: SignatureRegistry, behaviors=None,
                                 counters: MessageCounters | None = None):
    """Run the exchange for every committee and report per-committee outcomes.

    Leaders send their (commitment, member list) to the referee committee
    and their own partial set; the referee checks registration and digest
    consistency, reaches consensus per commitment and forwards the valid set
    to all leaders and partial-set members. Any honest partial-set member
    whose own view contradicts the registered commitment raises a witness.
    A forged list is therefore caught whenever the partial set holds at
    least one honest member.
    """
    behaviors = behaviors or {}
    counters = counters if counters is not None else MessageCounters()
    referee = sorted(config.referee)
    leaders = [c.leader for c in config.committees]
    all_ids = set(roster)
    outcomes = {}

    submissions = {}
    for k, committee in enumerate(config.committees):
        leader = committee.leader
        behavior = behaviors.get(leader, HONEST)
        if behavior.forge_member_list:
            member_list = _forged_member_list(committee, all_ids)
        else:
            member_list = sorted(committee.members)
        commitment = compute_semi_commitment(member_list)
        payload = encode_member_list(member_list)
        sig = registry.sign(leader, payload)
        submissions[k] = (member_list, commitment, payload, sig)
        # Leader -> every referee member and its own partial set.
        counters.add(leader, PHASE_SEMI_COMMITMENT,
                     sent=len(referee) + len(committee.partial_set),
                     stored=32 * len(config.committees))
        counters.add_many(referee, PHASE_SEMI_COMMITMENT, received=1)
        counters.add_many(committee.partial_set, PHASE_SEMI_COMMITMENT, received=1)

    referee_nodes = [roster[i] for i in referee]
    partial_members_all = [i for c in config.committees for i in c.partial_set]

    for k, committee in enumerate(config.committees):
        member_list, commitment, payload, sig = submissions[k]
        leader = committee.leader

        registered_ok = all(i in all_ids for i in member_list)
        digest_ok = compute_semi_commitment(member_list) == commitment
        if referee_nodes:
            agreed, _ = intra_committee_consensus(
                referee_nodes, commitment, counters, PHASE_SEMI_COMMITMENT
            )
        else:
            agreed = True
        # Each referee member forwards this commitment to every leader and
        # every partial-set member; m such commitments make the O(m^2) load.
        counters.add_many(referee, PHASE_SEMI_COMMITMENT,
                          sent=len(leaders) + len(partial_members_all),
                          stored=32 + 8 * len(member_list))
        counters.add_many(leaders, PHASE_SEMI_COMMITMENT, received=len(referee))
        counters.add_many(partial_members_all, PHASE_SEMI_COMMITMENT,
                          received=len(referee))

        if not (registered_ok and digest_ok and agreed):
            outcomes[k] = ExchangeOutcome(k, registered=False)
            continue

        true_digest = compute_semi_commitment(committee.members)
        honest_watchers = sorted(
            i for i in committee.partial_set
            if roster[i].honest and not behaviors.get(i, HONEST).false_accuse
        )
        if commitment != true_digest and honest_watchers:
            witness = Witness(
                kind=WITNESS_LIST_MISMATCH,
                accused=leader,
                payload=payload,
                signature=sig,
                reference=true_digest,
            )
            counters.add(honest_watchers[0], PHASE_ACCUSATION, sent=len(committee.members) - 1)
            outcomes[k] = ExchangeOutcome(
                k, registered=False, witness=witness, accuser=honest_watchers[0]
            )
        else:
            outcomes[k] = ExchangeOutcome(
                k,
                registered=True,
                commitment=commitment,
                forged_undetected=commitment != true_digest,
            )
    return outcomes


def build_invalid_tx_witness(txlist: TXList, signature: SimSignature,
                             registry: SignatureRegistry) -> Witness | None:
    """Witness against a signed proposal that contains an invalid transaction."""
    for tx in txlist.txs:
        if not tx.valid:
            return Witness(
                kind=WITNESS_INVALID_TX,
                accused=txlist.proposer,
                payload=txlist.serialize(),
                signature=signature,
                reference=tx.tx_id,
            )
    return None


def fabricate_witness(accuser: int, target_leader: int, registry: SignatureRegistry) -> Witness:
    """A framing attempt: the payload is signed by the accuser, not the leader.

    Signature verification against the accused leader must fail, so the
    referee always dismisses it.
    """
    payload = b"fabricated:" + encode_u64(target_leader)
    sig = registry.sign(accuser, payload)
    return Witness(
        kind=WITNESS_LIST_MISMATCH,
        accused=target_leader,
        payload=payload,
        signature=sig,
        reference=digest(b"no-such-commitment"),
    )


@dataclass
class AccusationOutcome:
    evicted: bool
    new_leader: int | None = None
    punished_reputation: float | None = None
    reason: str = ""


def accuse_and_reselect(committee: Committee, witness: Witness, prosecutor: int,
                        roster, registry: SignatureRegistry, referee_members,
                        reputations, behaviors=None,
                        counters: MessageCounters | None = None,
                        tx_lookup=None) -> AccusationOutcome:
    """Impeachment: committee vote, referee verification, leader replacement.

    The prosecutor broadcasts the witness; members approve or reject (honest
    members approve exactly the valid witnesses); on a strict majority the
    case goes to the referee committee, which re-verifies the witness and
    runs consensus. A successful eviction applies the cube-root punishment
    and promotes the highest-reputation remaining member.
    """
    behaviors = behaviors or {}
    counters = counters if counters is not None else MessageCounters()
    members = sorted(committee.members)
    c = len(members)

    counters.add(prosecutor, PHASE_ACCUSATION, sent=c - 1)
    counters.add_many((i for i in members if i != prosecutor), PHASE_ACCUSATION, received=1)

    valid = verify_witness(witness, registry, tx_lookup)
    approvals = 0
    for i in members:
        behavior = behaviors.get(i, HONEST)
        if roster[i].honest:
            approvals += 1 if valid else 0
        elif not behavior.reject_witness:
            # A careless corrupt member checks like everyone else.
            approvals += 1 if valid else 0
        counters.add(i, PHASE_ACCUSATION, sent=1)
        counters.add(prosecutor, PHASE_ACCUSATION, received=1)

    if approvals <= c / 2:
        return AccusationOutcome(evicted=False, reason="no committee majority")

    counters.add(prosecutor, PHASE_ACCUSATION, sent=len(referee_members))
    counters.add_many((n.id for n in referee_members), PHASE_ACCUSATION, received=1)

    if not valid:
        return AccusationOutcome(evicted=False, reason="witness failed verification")
    agreed, _ = intra_committee_consensus(
        referee_members, witness.payload, counters, PHASE_ACCUSATION
    )
    if not agreed:
        return AccusationOutcome(evicted=False, reason="referee consensus failed")

    survivors = [i for i in members if i != witness.accused]
    new_leader = max(survivors, key=lambda i: (reputations[i], -i))
    punished = punish_leader(reputations[witness.accused])
    return AccusationOutcome(
        evicted=True,
        new_leader=new_leader,
        punished_reputation=punished,
        reason="evicted",
    )
