"""Core domain types shared by every other module.

Nodes, committees, transactions, simulated signatures and the round-indexed
committee configuration. All types here are immutable value objects; the
round loop in :mod:`repshard.engine` is the only place state evolves.

Digests are SHA-256 (32 bytes) so the semi-commitment binding argument holds
in practice. Signatures are *simulated*: a signature verifies iff the exact
(signer, digest) pair was produced by :meth:`SignatureRegistry.sign`. That
gives unforgeability within a run without real asymmetric crypto.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

NodeId = int

DIGEST_BYTES = 32


class UnknownNodeError(KeyError):
    """Raised when an operation references a node id outside the roster."""


def digest(data: bytes) -> bytes:
    """256-bit digest of a byte string."""
    return hashlib.sha256(data).digest()


def encode_u64(value: int) -> bytes:
    """Fixed 8-byte big-endian encoding used in all canonical serializations."""
    return int(value).to_bytes(8, "big")


def encode_member_list(member_ids) -> bytes:
    """Canonical byte encoding of a member set.

    Members are sorted ascending and each encoded as 8-byte big-endian, so
    the encoding (and hence any digest of it) is order-insensitive.
    """
    return b"".join(encode_u64(i) for i in sorted(member_ids))


@dataclass(frozen=True)
class Node:
    """A network participant.

    ``resource`` is the node's abstract computation budget per round;
    ``reputation`` its initial reputation (the evolving value lives in the
    engine's per-round state). ``corrupted_at`` is the round at which the
    adversary's corruption of this node takes effect.
    """

    id: NodeId
    honest: bool = True
    resource: float = 1.0
    reputation: float = 0.0
    corrupted_at: int | None = None

    def __post_init__(self):
        if self.resource <= 0:
            raise ValueError(f"node {self.id}: resource must be positive")
        if not self.honest and self.corrupted_at is None:
            raise ValueError(f"node {self.id}: dishonest node needs corrupted_at")


@dataclass(frozen=True)
class Committee:
    """One working committee: its members, leader and supervising partial set."""

    members: frozenset
    leader: NodeId
    partial_set: frozenset

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(self.members))
        object.__setattr__(self, "partial_set", frozenset(self.partial_set))


@dataclass(frozen=True)
class CommitteeConfig:
    """A full round assignment: referee committee plus the m working committees.

    ``referee`` may be empty in referee-less runs (n = m*c), used when
    mimicking the performance-evaluation setup where all nodes sit in
    working committees.
    """

    round: int
    referee: frozenset
    committees: tuple

    def __post_init__(self):
        object.__setattr__(self, "referee", frozenset(self.referee))
        object.__setattr__(self, "committees", tuple(self.committees))

    def leaders(self) -> tuple:
        return tuple(c.leader for c in self.committees)

    def all_members(self):
        """Every node id in the configuration (referee included), as a list."""
        out = list(self.referee)
        for c in self.committees:
            out.extend(c.members)
        return out


@dataclass(frozen=True)
class Transaction:
    """A UTXO-style transaction.

    ``inputs`` reference prior outputs as (tx_id, output_index) pairs.
    Verification cost is linear in the number of inputs. ``valid`` is the
    ground-truth validity flag that honest verifiers read; malicious voters
    may ignore it.
    """

    tx_id: bytes
    inputs: tuple
    valid: bool = True

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if len(self.tx_id) != DIGEST_BYTES:
            raise ValueError("tx_id must be a 256-bit digest")
        if len(self.inputs) < 1:
            raise ValueError("a transaction needs at least one input")

    @property
    def n_inputs(self) -> int:
        return len(self.inputs)

    @property
    def cost(self) -> float:
        return float(len(self.inputs))


def make_transaction(tx_id: bytes, n_inputs: int, valid: bool = True) -> Transaction:
    """Build a transaction with synthetic input references derived from tx_id."""
    inputs = tuple((digest(tx_id + encode_u64(i)), 0) for i in range(n_inputs))
    return Transaction(tx_id=tx_id, inputs=inputs, valid=valid)


@dataclass(frozen=True)
class SimSignature:
    signer: NodeId
    message_digest: bytes


class SignatureRegistry:
    """Simulated signing authority for one run.

    verify() succeeds iff the (signer, digest) pair was actually produced by
    sign() for that signer, so constructing a SimSignature by hand never
    verifies: within the simulation, signatures are unforgeable.
    """

    def __init__(self, node_ids=()):
        self._known = set(node_ids)
        self._issued = set()

    def register(self, node_ids) -> None:
        self._known.update(node_ids)

    def is_registered(self, node_id: NodeId) -> bool:
        return node_id in self._known

    def sign(self, node_id: NodeId, message: bytes) -> SimSignature:
        if node_id not in self._known:
            raise UnknownNodeError(node_id)
        d = digest(message)
        self._issued.add((node_id, d))
        return SimSignature(signer=node_id, message_digest=d)

    def verify(self, sig: SimSignature, node_id: NodeId, message: bytes) -> bool:
        if sig.signer != node_id:
            return False
        d = digest(message)
        if sig.message_digest != d:
            return False
        return (node_id, d) in self._issued


@dataclass(frozen=True)
class SystemParams:
    """Global protocol parameters.

    n = (m+1)*c in the full configuration (m working committees plus the
    referee committee); n = m*c is also accepted for referee-less
    performance runs. lam is the partial-set size.
    """

    n: int
    m: int
    c: int
    lam: int
    f: float = 0.0
    alpha: float = 0.5
    d: int = 1
    sigma: float = 0.1
    omega: float = 0.5
    p_l: float = 0.7
    p_m: float = 0.9

    def __post_init__(self):
        if self.n not in ((self.m + 1) * self.c, self.m * self.c):
            raise ValueError(
                f"n={self.n} must equal (m+1)*c={(self.m + 1) * self.c}"
                f" or m*c={self.m * self.c}"
            )
        if not (1 <= self.lam < self.c):
            raise ValueError("lam must satisfy 1 <= lam < c")
        if not (0.0 <= self.f < 1.0):
            raise ValueError("f must lie in [0, 1)")
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError("alpha must lie in [0, 1]")
        if self.d < 1:
            raise ValueError("d must be a positive integer")
        if self.sigma <= 0 or self.omega <= 0:
            raise ValueError("sigma and omega must be positive")
        if not (0.0 < self.p_l < self.p_m <= 1.0):
            raise ValueError("need 0 < p_l < p_m <= 1")

    @property
    def has_referee(self) -> bool:
        return self.n == (self.m + 1) * self.c


def validate_config(config: CommitteeConfig, params: SystemParams) -> list:
    """Check all structural invariants of a committee configuration.

    Returns a list of human-readable violation strings; empty means valid.
    Violations are returned rather than raised so callers can assert on the
    full set at once.
    """
    violations = []
    c = params.c

    if len(config.committees) != params.m:
        violations.append(
            f"committee count: expected {params.m}, got {len(config.committees)}"
        )
    if params.has_referee:
        if len(config.referee) != c:
            violations.append(
                f"referee size: expected {c}, got {len(config.referee)}"
            )
    elif config.referee:
        violations.append("referee present in a referee-less configuration")

    seen = {}
    for node in config.referee:
        seen[node] = seen.get(node, 0) + 1
    for idx, committee in enumerate(config.committees):
        if len(committee.members) != c:
            violations.append(
                f"committee {idx} size: expected {c}, got {len(committee.members)}"
            )
        if committee.leader not in committee.members:
            violations.append(f"committee {idx}: leader not a member")
        if len(committee.partial_set) != params.lam:
            violations.append(
                f"partial set size: committee {idx} has {len(committee.partial_set)},"
                f" expected {params.lam}"
            )
        if committee.leader in committee.partial_set:
            violations.append(f"committee {idx}: leader inside its partial set")
        if not committee.partial_set <= committee.members:
            violations.append(f"committee {idx}: partial set not within members")
        for node in committee.members:
            seen[node] = seen.get(node, 0) + 1

    for node, count in seen.items():
        if count > 1:
            violations.append(f"duplicate membership: node {node} appears {count} times")
    expected = set(range(params.n))
    missing = expected - seen.keys()
    if missing:
        violations.append(f"unassigned nodes: {sorted(missing)[:8]}")
    extra = seen.keys() - expected
    if extra:
        violations.append(f"unknown node ids: {sorted(extra)[:8]}")

    return violations
