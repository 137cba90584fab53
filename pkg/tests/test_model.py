import pytest

from repshard.model import (
    Node,
    SignatureRegistry,
    SimSignature,
    SystemParams,
    Transaction,
    digest,
    make_transaction,
    validate_config,
)
from repshard.reshuffle import bootstrap


def make_nodes(n, resource=10.0):
    return [Node(id=i, resource=resource) for i in range(n)]


class TestSignatures:
    def test_sign_verify_roundtrip(self):
        reg = SignatureRegistry([3, 4])
        sig = reg.sign(3, b"abc")
        assert reg.verify(sig, 3, b"abc")

    def test_wrong_signer_rejected(self):
        reg = SignatureRegistry([3, 4])
        sig = reg.sign(3, b"abc")
        assert not reg.verify(sig, 4, b"abc")

    def test_wrong_message_rejected(self):
        reg = SignatureRegistry([3, 4])
        sig = reg.sign(3, b"abc")
        assert not reg.verify(sig, 3, b"abd")

    def test_unknown_node_errors(self):
        reg = SignatureRegistry([1])
        with pytest.raises(KeyError):
            reg.sign(99, b"abc")

    def test_handcrafted_signature_never_verifies(self):
        # Soundness: verify(s, id, m) holds iff s came from sign(id, m).
        reg = SignatureRegistry([7])
        fake = SimSignature(signer=7, message_digest=digest(b"abc"))
        assert not reg.verify(fake, 7, b"abc")
        real = reg.sign(7, b"abc")
        assert reg.verify(real, 7, b"abc")


class TestTransaction:
    def test_cost_is_input_count(self):
        tx = make_transaction(digest(b"t"), 3)
        assert tx.n_inputs == 3
        assert tx.cost == 3.0

    def test_zero_inputs_rejected(self):
        with pytest.raises(ValueError):
            Transaction(tx_id=digest(b"t"), inputs=())

    def test_bad_digest_length_rejected(self):
        with pytest.raises(ValueError):
            Transaction(tx_id=b"short", inputs=((digest(b"p"), 0),))


class TestSystemParams:
    def test_accepts_referee_layout(self):
        p = SystemParams(n=12, m=2, c=4, lam=1)
        assert p.has_referee

    def test_accepts_referee_less_layout(self):
        p = SystemParams(n=8, m=2, c=4, lam=1)
        assert not p.has_referee

    def test_rejects_mismatched_sizes(self):
        with pytest.raises(ValueError):
            SystemParams(n=13, m=2, c=4, lam=1)

    def test_rejects_bad_budget_order(self):
        with pytest.raises(ValueError):
            SystemParams(n=12, m=2, c=4, lam=1, p_l=0.9, p_m=0.7)


class TestValidateConfig:
    def test_well_formed_config_passes(self):
        params = SystemParams(n=12, m=2, c=4, lam=1)
        config = bootstrap(make_nodes(12), params, seed=0)
        assert validate_config(config, params) == []

    def test_duplicate_membership_reported(self):
        params = SystemParams(n=12, m=2, c=4, lam=1)
        config = bootstrap(make_nodes(12), params, seed=0)
        c0, c1 = config.committees
        dup = next(iter(c0.members - {c0.leader}))
        broken = c1.__class__(
            members=frozenset(set(c1.members) - {max(c1.members - {c1.leader})} | {dup}),
            leader=c1.leader,
            partial_set=c1.partial_set & (c1.members - {max(c1.members - {c1.leader})}),
        )
        bad = config.__class__(config.round, config.referee, (c0, broken))
        problems = validate_config(bad, params)
        assert any("duplicate membership" in p for p in problems)

    def test_partial_set_size_reported(self):
        params = SystemParams(n=30, m=2, c=10, lam=3)
        config = bootstrap(make_nodes(30), params, seed=1)
        c0, c1 = config.committees
        shrunk = c1.__class__(
            members=c1.members, leader=c1.leader,
            partial_set=frozenset(sorted(c1.partial_set)[:-1]),
        )
        bad = config.__class__(config.round, config.referee, (c0, shrunk))
        problems = validate_config(bad, params)
        assert any("partial set size" in p for p in problems)

    def test_partition_property_over_seeds(self):
        # Every node appears exactly once across referee and committees.
        params = SystemParams(n=40, m=3, c=10, lam=2)
        nodes = make_nodes(40)
        for seed in range(25):
            config = bootstrap(nodes, params, seed=seed)
            assert validate_config(config, params) == []
            assert sorted(config.all_members()) == list(range(40))
