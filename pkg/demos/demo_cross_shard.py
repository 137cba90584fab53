"""Fraction of cross-shard transactions as the shard count grows.

Uses the bundled Bitcoin-like input-count distribution. With 20 shards
roughly 96-98% of transactions reference at least one foreign input; by
100 shards the fraction passes 99%.
"""

from repshard.sharding import (
    cross_shard_fraction,
    default_input_distribution,
    monte_carlo_cross_fraction,
    sweep_cross_shard,
)

dist = default_input_distribution()
print("input-count distribution (truncated at 12):")
for k in sorted(dist.probabilities):
    bar = "#" * round(200 * dist.probabilities[k])
    print(f"  {k:>2}: {dist.probabilities[k]:.4f} {bar}")
print(f"mean inputs per transaction: {dist.mean_inputs():.3f}\n")

print(f"{'shards':>7} {'cross fraction':>15}")
for m, frac in sweep_cross_shard(dist, 20, 100, step=10):
    print(f"{m:>7} {frac:>15.5f}")

closed = cross_shard_fraction(dist, 20)
sampled = monte_carlo_cross_fraction(dist, 20, samples=200_000, seed=1)
print(f"\nclosed form at m=20: {closed:.5f}; Monte-Carlo check: {sampled:.5f}")
