"""Credit assignment: whole-policy fitness evaluation, rule-strength updates
(profit sharing and the bucket brigade), and the implicit value function a
tabular population carries."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .envs import Environment, EpisodeTrace, expected_return, run_episode
from .evolution import Population
from .policies import DEFAULT_RULE_ID, Rule, RuleSetPolicy

# Start distributions at or below this size are expanded exactly.
EXACT_START_LIMIT = 64


class MissingRuleIds(Exception):
    """Trace carries no rule-firing records."""


@dataclass
class FitnessConfig:
    trials: int = 1
    horizon: int = 1000
    discount: float = 1.0
    aggregation: str = "undiscounted_sum"  # or "discounted_sum"

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must lie in [0, 1]")
        if self.aggregation == "undiscounted_sum" and self.discount != 1.0:
            raise ValueError("undiscounted aggregation requires discount = 1")
        if self.aggregation not in ("undiscounted_sum", "discounted_sum"):
            raise ValueError(f"unknown aggregation {self.aggregation!r}")


def aggregate_return(trace: EpisodeTrace, cfg: FitnessConfig) -> float:
    rewards = [s.reward for s in trace.steps[: cfg.horizon]]
    if cfg.aggregation == "undiscounted_sum":
        return float(sum(rewards))
    return float(sum(cfg.discount**i * r for i, r in enumerate(rewards)))


def evaluate_fitness(
    env: Environment,
    policy,
    cfg: Optional[FitnessConfig] = None,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Fitness of one policy: the exact start-distribution expectation of the
    aggregated episode return, or a ``cfg.trials``-sample mean when the start
    distribution is too large to expand."""
    cfg = cfg or FitnessConfig()

    def episode_value(start: str) -> float:
        trace = run_episode(env, policy, start, max_steps=cfg.horizon)
        return aggregate_return(trace, cfg)

    starts = env.start_states
    if len(starts) == 1:
        return episode_value(starts[0][0])
    if len(starts) <= EXACT_START_LIMIT or rng is None:
        return sum(p * episode_value(s) for s, p in starts)
    probs = [p for _, p in starts]
    samples = rng.choice(len(starts), size=cfg.trials, p=probs)
    return float(np.mean([episode_value(starts[int(i)][0]) for i in samples]))


def normalize_payoff(payoff: float, payoff_range: tuple[float, float]) -> float:
    lo, hi = payoff_range
    return min(1.0, max(0.0, (payoff - lo) / (hi - lo)))


def profit_sharing_update(
    rules_fired: Iterable[Rule],
    payoff: float,
    beta: float,
    payoff_range: tuple[float, float] = (0.0, 1.0),
) -> None:
    """Move every fired rule's strength toward the normalized trial payoff by
    the fraction ``beta``; unfired rules are untouched."""
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    target = normalize_payoff(payoff, payoff_range)
    for rule in rules_fired:
        rule.strength += beta * (target - rule.strength)


def bucket_brigade_update(
    trace: EpisodeTrace,
    policy: RuleSetPolicy,
    bid_fraction: float,
    final_payoff: float,
    payoff_range: tuple[float, float] = (0.0, 1.0),
) -> None:
    """Each firing rule pays a bid (a fraction of its strength) back to the
    rule that fired on the previous step; the last rule in the chain is paid
    the normalized environment payoff directly."""
    if not 0.0 < bid_fraction < 1.0:
        raise ValueError("bid_fraction must lie in (0, 1)")
    fired = [s.fired_rule_id for s in trace.steps]
    if any(r is None for r in fired):
        raise MissingRuleIds("trace has steps without rule-firing records")
    chain = [policy.rules[r] for r in fired if r != DEFAULT_RULE_ID]
    if not chain:
        raise MissingRuleIds("no listed rule fired during the trace")
    for prev, curr in zip(chain, chain[1:]):
        bid = bid_fraction * curr.strength
        curr.strength -= bid
        prev.strength += bid
    chain[-1].strength += normalize_payoff(final_payoff, payoff_range)


@dataclass
class ImplicitValueTable:
    """Mean fitness of the population members selecting each pair; pairs no
    member selects carry no entry."""

    num_observations: int
    num_actions: int
    entries: dict = field(default_factory=dict)

    def get(self, obs_id: int, action_id: int) -> Optional[float]:
        return self.entries.get((obs_id, action_id))


def implicit_value_estimate(pop: Population, num_actions: int) -> ImplicitValueTable:
    """Approximate value function read off a tabular-policy population."""
    genes0 = pop.members[0].chromosome
    num_obs = len(genes0)
    sums: dict[tuple[int, int], float] = {}
    counts: dict[tuple[int, int], int] = {}
    for member in pop.members:
        for o, a in enumerate(member.chromosome):
            key = (o, int(a))
            sums[key] = sums.get(key, 0.0) + member.fitness
            counts[key] = counts.get(key, 0) + 1
    table = ImplicitValueTable(num_obs, num_actions)
    table.entries = {k: sums[k] / counts[k] for k in sums}
    return table
