"""One adversarial protocol round, step by step.

A corrupt leader circulates a forged member list; an honest partial-set
member catches the digest mismatch, the committee approves the impeachment,
the referee committee verifies the leader-signed evidence, and the leader
is evicted with its reputation cut to the cube root.
"""

import numpy as np

from repshard.committee import Behavior
from repshard.engine import build_roster, force_secure_bootstrap, play_protocol_round
from repshard.model import SystemParams, digest, encode_u64, make_transaction

params = SystemParams(n=32, m=3, c=8, lam=2, f=0.25)
resources = np.full(params.n, 100.0)

# The corrupt nodes played nice in earlier rounds and sit on top reputation,
# so the selection rule hands them the leader seats.
corrupted = {3, 8, 14, 20, 27, 30}
roster = build_roster(params, resources, corrupted_ids=corrupted)
rng = np.random.default_rng(17)
reputations = {i: float(rng.uniform(0, 30)) for i in range(params.n)}
for i in corrupted:
    reputations[i] += 100.0

config = force_secure_bootstrap(roster, params, seed=5, reputations=reputations)
leaders = [c.leader for c in config.committees]
print("round configuration:")
print(f"  referee committee: {sorted(config.referee)}")
for k, committee in enumerate(config.committees):
    tag = "CORRUPT" if committee.leader in corrupted else "honest"
    print(f"  committee {k}: leader {committee.leader} ({tag}), "
          f"partial set {sorted(committee.partial_set)}")

behaviors = {i: Behavior(forge_member_list=True, invert_votes=True) for i in corrupted}
pending = {
    k: [make_transaction(digest(encode_u64(k * 10 + i)), 2) for i in range(5)]
    for k in range(params.m)
}

result = play_protocol_round(
    roster, params, reputations, seed=5, behaviors=behaviors,
    pending=pending, config=config,
)

print("\noutcome:")
for k, accepted in result.accepted.items():
    print(f"  committee {k}: {len(accepted)} transactions accepted")
for k, accused in result.evictions:
    print(f"  committee {k}: leader {accused} evicted "
          f"(reputation {reputations[accused]:.2f} -> {result.reputations[accused]:.2f})")
if not result.evictions:
    print("  no evictions (all leaders honest this round)")
print(f"  invalid transactions accepted: {result.invalid_accepted}")
print(f"  honest leaders evicted: {result.honest_evictions}")
print(f"  round completed: {result.liveness}")
