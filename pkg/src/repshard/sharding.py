"""Transaction-to-shard assignment and the cross-shard fraction study.

A transaction's shard is a deterministic function of its 256-bit id: either
the top-k bits (requires a power-of-two shard count) or the id modulo the
shard count. An optional salt re-hashes the id first, which rerolls the
whole assignment (the load-rebalancing knob).

The closed-form cross-shard fraction treats every input's shard as
independently uniform, which matches a random hash split: a transaction
with k inputs is intra-shard with probability m**(-k).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .model import DIGEST_BYTES, Transaction, digest

MODE_PREFIX_BITS = "prefix-bits"
MODE_MODULO = "modulo"

INTRA = "intra"
CROSS = "cross"

MAX_INPUTS = 12


@dataclass(frozen=True)
class ShardingScheme:
    mode: str
    shard_count: int
    salt: bytes | None = None

    def __post_init__(self):
        if self.mode not in (MODE_PREFIX_BITS, MODE_MODULO):
            raise ValueError(f"unknown sharding mode: {self.mode!r}")
        if self.shard_count < 1:
            raise ValueError("shard_count must be >= 1")
        if self.mode == MODE_PREFIX_BITS and self.shard_count & (self.shard_count - 1):
            raise ValueError("prefix-bits mode needs a power-of-two shard count")


def assign_shard(tx_id: bytes, scheme: ShardingScheme) -> int:
    """Map a 256-bit transaction id to a shard index in [0, shard_count)."""
    if len(tx_id) != DIGEST_BYTES:
        raise ValueError("tx_id must be a 256-bit digest")
    if scheme.salt is not None:
        tx_id = digest(scheme.salt + tx_id)
    value = int.from_bytes(tx_id, "big")
    if scheme.mode == MODE_MODULO:
        return value % scheme.shard_count
    k = scheme.shard_count.bit_length() - 1
    return value >> (8 * DIGEST_BYTES - k) if k else 0


def classify(tx: Transaction, input_shards, home_shard: int) -> str:
    """Intra iff every referenced input lives in the transaction's home shard."""
    input_shards = list(input_shards)
    if len(input_shards) != tx.n_inputs:
        raise ValueError(
            f"expected {tx.n_inputs} input shards, got {len(input_shards)}"
        )
    return INTRA if all(s == home_shard for s in input_shards) else CROSS


@dataclass(frozen=True)
class InputCountDistribution:
    """Probability of a transaction having k inputs, k = 1..K_max."""

    probabilities: dict

    def __post_init__(self):
        probs = dict(self.probabilities)
        object.__setattr__(self, "probabilities", probs)
        if not probs:
            raise ValueError("empty distribution")
        if any(k < 1 for k in probs):
            raise ValueError("input counts must be >= 1")
        if any(p < 0 for p in probs.values()):
            raise ValueError("probabilities must be non-negative")
        total = sum(probs.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}, expected 1")

    def counts(self) -> np.ndarray:
        return np.array(sorted(self.probabilities), dtype=np.int64)

    def probs(self) -> np.ndarray:
        return np.array([self.probabilities[k] for k in sorted(self.probabilities)])

    def mean_inputs(self) -> float:
        return float(sum(k * p for k, p in self.probabilities.items()))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.choice(self.counts(), size=size, p=self.probs())


def default_input_distribution() -> InputCountDistribution:
    """Bitcoin-like input-count distribution.

    Approximate: the published histogram is graphical only, so these values
    are a config default, truncated at 12 inputs. Mass beyond 4 inputs
    decays geometrically (ratio 1/2) and is normalized to the leftover 7%.
    """
    probs = {1: 0.45, 2: 0.30, 3: 0.12, 4: 0.06}
    weights = [0.5 ** i for i in range(8)]
    total = sum(weights)
    for i, k in enumerate(range(5, MAX_INPUTS + 1)):
        probs[k] = 0.07 * weights[i] / total
    return InputCountDistribution(probs)


def load_input_distribution(path) -> InputCountDistribution:
    """Read a distribution CSV with header ``inputs,probability``."""
    probs = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or {"inputs", "probability"} - set(reader.fieldnames):
            raise ValueError(f"{path}: expected header 'inputs,probability'")
        for row in reader:
            probs[int(row["inputs"])] = float(row["probability"])
    return InputCountDistribution(probs)


def save_input_distribution(dist: InputCountDistribution, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["inputs", "probability"])
        for k in sorted(dist.probabilities):
            writer.writerow([k, repr(dist.probabilities[k])])


def load_trace(path):
    """Read a transaction trace CSV with header ``tx_id,n_inputs``."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or {"tx_id", "n_inputs"} - set(reader.fieldnames):
            raise ValueError(f"{path}: expected header 'tx_id,n_inputs'")
        for row in reader:
            rows.append((bytes.fromhex(row["tx_id"]), int(row["n_inputs"])))
    return rows


def cross_shard_fraction(dist: InputCountDistribution, m: int) -> float:
    """Probability that a random transaction is cross-shard under m shards.

    Inputs are independently uniform over shards, so a k-input transaction
    is intra-shard with probability m**(-k).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    intra = sum(p * m ** (-k) for k, p in dist.probabilities.items())
    return 1.0 - intra


def sweep_cross_shard(dist: InputCountDistribution, m_min: int, m_max: int, step: int = 1):
    """One (m, fraction) row per shard count in [m_min, m_max]."""
    if not (1 <= m_min <= m_max):
        raise ValueError("need 1 <= m_min <= m_max")
    return [(m, cross_shard_fraction(dist, m)) for m in range(m_min, m_max + 1, step)]


def monte_carlo_cross_fraction(
    dist: InputCountDistribution, m: int, samples: int, seed: int
) -> float:
    """Independent estimate of the cross-shard fraction by direct simulation.

    Draws input counts from the distribution, assigns each input a uniform
    shard, and classifies against a uniform home shard. Kept free of the
    closed form so it can serve as its oracle.
    """
    rng = np.random.default_rng(seed)
    ks = dist.sample(rng, samples)
    home = rng.integers(0, m, size=samples)
    cross = 0
    for k in np.unique(ks):
        idx = ks == k
        count = int(idx.sum())
        shards = rng.integers(0, m, size=(count, int(k)))
        cross += int((shards != home[idx, None]).any(axis=1).sum())
    return cross / samples
