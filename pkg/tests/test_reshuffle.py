import math

import numpy as np
import pytest
from scipy import stats

from repshard.model import Node, SystemParams, validate_config
from repshard.reshuffle import (
    alpha_for_beta,
    bootstrap,
    ecfr_step,
    majority_bound_value,
    theorem_predicate,
)


def make_nodes(n, reputations=None, resource=10.0):
    reputations = reputations or {}
    return [
        Node(id=i, resource=resource, reputation=reputations.get(i, 0.0))
        for i in range(n)
    ]


PARAMS_SMALL = SystemParams(n=12, m=2, c=4, lam=1)
PARAMS_MID = SystemParams(n=40, m=3, c=10, lam=2)


class TestBootstrap:
    def test_valid_config(self):
        config = bootstrap(make_nodes(12), PARAMS_SMALL, seed=0)
        assert validate_config(config, PARAMS_SMALL) == []

    def test_size_mismatch_errors(self):
        with pytest.raises(ValueError):
            bootstrap(make_nodes(11), PARAMS_SMALL, seed=0)

    def test_equal_reputation_tie_break(self):
        # With all reputations equal, leaders are the smallest non-referee ids.
        config = bootstrap(make_nodes(12), PARAMS_SMALL, seed=3)
        non_referee = set(range(12)) - config.referee
        expected = set(sorted(non_referee)[:2])
        assert set(config.leaders()) == expected

    def test_highest_reputation_leads(self):
        reps = {7: 5.0, 2: 3.0}
        config = bootstrap(make_nodes(12, reps), PARAMS_SMALL, seed=1)
        non_referee = set(range(12)) - config.referee
        want = {i for i in (7, 2) if i in non_referee}
        assert want <= set(config.leaders())

    def test_member_assignment_uniform_chi_square(self):
        # Track a plain member's committee over many seeds; reputations make
        # the top ids permanent leaders so low ids are always members.
        reps = {i: float(i) for i in range(40)}
        nodes = make_nodes(40, reps)
        seeds = 10_000
        tracked = [0, 5, 11]
        counts = {i: np.zeros(PARAMS_MID.m) for i in tracked}
        member_seeds = {i: 0 for i in tracked}
        for seed in range(seeds):
            config = bootstrap(nodes, PARAMS_MID, seed=seed)
            leaders = set(config.leaders())
            for i in tracked:
                if i in config.referee or i in leaders:
                    continue
                for k, committee in enumerate(config.committees):
                    if i in committee.members:
                        counts[i][k] += 1
                        member_seeds[i] += 1
                        break
        for i in tracked:
            expected = member_seeds[i] / PARAMS_MID.m
            _, p = stats.chisquare(counts[i], [expected] * PARAMS_MID.m)
            assert p > 0.001, f"node {i}: committee counts {counts[i]}"


class TestEcfrStep:
    def test_alpha_zero_is_identity(self):
        params = SystemParams(n=40, m=3, c=10, lam=2, alpha=0.0)
        config = bootstrap(make_nodes(40), params, seed=5)
        new, marked = ecfr_step(config, params, seed=6)
        assert marked == frozenset()
        assert new.referee == config.referee
        assert new.committees == config.committees

    def test_alpha_one_marks_every_eligible(self):
        params = SystemParams(n=40, m=3, c=10, lam=2, alpha=1.0)
        config = bootstrap(make_nodes(40), params, seed=5)
        new, marked = ecfr_step(config, params, seed=6)
        eligible = set()
        for committee in config.committees:
            eligible |= committee.members - {committee.leader}
        assert marked == frozenset(eligible)
        assert validate_config(new, params) == []

    def test_size_conservation_any_alpha(self):
        for alpha in (0.2, 0.5, 0.8):
            params = SystemParams(n=40, m=3, c=10, lam=2, alpha=alpha)
            config = bootstrap(make_nodes(40), params, seed=2)
            for seed in range(20):
                config, _ = ecfr_step(config, params, seed=seed)
                assert validate_config(config, params) == []

    def test_leaders_and_referee_exempt(self):
        params = SystemParams(n=40, m=3, c=10, lam=2, alpha=1.0)
        config = bootstrap(make_nodes(40), params, seed=7)
        new, marked = ecfr_step(config, params, seed=8)
        assert not (marked & config.referee)
        assert not (marked & set(config.leaders()))
        assert [c.leader for c in new.committees] == list(config.leaders())

    def test_marking_rate_matches_alpha(self):
        alpha, rounds = 0.3, 400
        params = SystemParams(n=40, m=3, c=10, lam=2, alpha=alpha)
        config = bootstrap(make_nodes(40), params, seed=1)
        eligible = sorted(config.committees[0].members - {config.committees[0].leader})
        node = eligible[0]
        hits = 0
        for seed in range(rounds):
            _, marked = ecfr_step(config, params, seed=seed)
            hits += node in marked
        tol = 4 * math.sqrt(alpha * (1 - alpha) / rounds)
        assert abs(hits / rounds - alpha) < tol

    def test_expected_marked_count(self):
        alpha = 0.4
        params = SystemParams(n=40, m=3, c=10, lam=2, alpha=alpha)
        config = bootstrap(make_nodes(40), params, seed=9)
        eligible = sum(len(c.members) - 1 for c in config.committees)
        sizes = []
        for seed in range(600):
            _, marked = ecfr_step(config, params, seed=seed)
            sizes.append(len(marked))
        mean = np.mean(sizes)
        sd = math.sqrt(eligible * alpha * (1 - alpha) / len(sizes))
        assert abs(mean - alpha * eligible) < 3 * sd

    def test_destination_uniform_over_slots(self):
        # Conditioned on being marked, a node's destination committee follows
        # the per-seed vacancy proportions; chi-square over a seed ensemble.
        alpha = 0.5
        params = SystemParams(n=40, m=3, c=10, lam=2, alpha=alpha)
        config = bootstrap(make_nodes(40), params, seed=4)
        tracked = sorted(config.committees[0].members - {config.committees[0].leader})[0]
        observed = np.zeros(params.m)
        expected = np.zeros(params.m)
        for seed in range(8000):
            new, marked = ecfr_step(config, params, seed=seed)
            if tracked not in marked:
                continue
            slots = np.array([
                len(marked & old_c.members) for old_c in config.committees
            ], dtype=float)
            expected += slots / slots.sum()
            for k, committee in enumerate(new.committees):
                if tracked in committee.members:
                    observed[k] += 1
                    break
        _, p = stats.chisquare(observed, expected * observed.sum() / expected.sum())
        assert p > 0.001, f"observed {observed}, expected {expected}"


class TestAlphaBetaAlgebra:
    def test_hand_value(self):
        assert alpha_for_beta(1 / 8, 1) == pytest.approx(math.sqrt(7 / 8), abs=1e-12)

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            beta = float(rng.uniform(1e-6, 1 - 1e-6))
            d = int(rng.integers(1, 12))
            alpha = alpha_for_beta(beta, d)
            assert (1 - alpha ** 2) ** d == pytest.approx(beta, abs=1e-12)

    def test_beta_near_one_gives_tiny_alpha(self):
        assert alpha_for_beta(1 - 1e-12, 3) < 1e-5

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            alpha_for_beta(0.0, 1)
        with pytest.raises(ValueError):
            alpha_for_beta(1.0, 2)


class TestTheoremPredicate:
    def test_third_and_eighth_holds(self):
        assert majority_bound_value(1 / 3, 1 / 8) == pytest.approx(0.494140625, abs=1e-12)
        assert theorem_predicate(1 / 3, 1 / 8) is True

    def test_point_four_fails(self):
        assert majority_bound_value(0.4, 1 / 8) == pytest.approx(0.56796875, abs=1e-12)
        assert theorem_predicate(0.4, 1 / 8) is False

    def test_f_zero_reduces_to_beta_threshold(self):
        assert theorem_predicate(0.0, 0.49)
        assert not theorem_predicate(0.0, 0.51)
