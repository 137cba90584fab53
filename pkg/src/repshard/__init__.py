"""Simulator and analysis toolkit for reputation-driven sharded committees.

The package splits into the domain model (:mod:`repshard.model`), shard
assignment (:mod:`repshard.sharding`), committee formation and reshuffling
(:mod:`repshard.reshuffle`), scoring and leader selection
(:mod:`repshard.reputation`), the per-committee protocol round
(:mod:`repshard.committee`), security bounds and Monte-Carlo experiments
(:mod:`repshard.security`), and the end-to-end round loop
(:mod:`repshard.engine`). The ``repshard`` console script fronts it all.
"""

from .model import (
    Committee,
    CommitteeConfig,
    Node,
    SignatureRegistry,
    SimSignature,
    SystemParams,
    Transaction,
    validate_config,
)
from .reshuffle import alpha_for_beta, bootstrap, ecfr_step, theorem_predicate
from .reputation import (
    distribute_rewards,
    majority_decide,
    map_reputation,
    punish_leader,
    score_member,
    select_leaders,
    update_reputations,
)
from .sharding import (
    InputCountDistribution,
    ShardingScheme,
    assign_shard,
    classify,
    cross_shard_fraction,
    default_input_distribution,
    sweep_cross_shard,
)
from .security import (
    committee_failure_curve,
    ecfr_montecarlo,
    hypergeometric_tail_exact,
    kl_divergence,
    lemma1_empirical_check,
    partial_set_insecurity,
)
from .engine import SimConfig, run_comparison, run_simulation, sample_resources

__version__ = "0.1.0"
