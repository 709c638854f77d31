"""Fitness evaluation, rule-strength credit assignment, and the implicit
value function carried by a tabular population."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evorl.credit import (
    FitnessConfig,
    MissingRuleIds,
    aggregate_return,
    bucket_brigade_update,
    evaluate_fitness,
    implicit_value_estimate,
    normalize_payoff,
    profit_sharing_update,
)
from evorl.envs import EpisodeTrace, TraceStep, make_grid_world, \
    make_hidden_state_world, run_episode
from evorl.evolution import Individual, Population
from evorl.policies import DEFAULT_RULE_ID, Rule, RuleSetPolicy, TabularPolicy
from evorl.reference import GRID_KNOWN_POLICIES, grid_policy_genes


def trace_with_rewards(*rewards, rule_ids=None):
    from evorl.envs import Action, Observation
    rule_ids = rule_ids or [None] * len(rewards)
    steps = tuple(
        TraceStep(Observation(0, "o"), Action(0, "a"), r, rid)
        for r, rid in zip(rewards, rule_ids)
    )
    return EpisodeTrace(steps, sum(rewards))


class TestFitnessConfig:
    def test_defaults_are_valid(self):
        cfg = FitnessConfig()
        assert cfg.discount == 1.0

    @pytest.mark.parametrize("kwargs", [
        dict(trials=0),
        dict(horizon=0),
        dict(discount=1.5),
        dict(aggregation="undiscounted_sum", discount=0.5),
        dict(aggregation="product"),
    ])
    def test_invalid_configs_rejected(self, kwargs):
        with pytest.raises(ValueError):
            FitnessConfig(**kwargs)


class TestAggregateReturn:
    def test_undiscounted_sum(self):
        trace = trace_with_rewards(1.0, 2.0, 3.0)
        assert aggregate_return(trace, FitnessConfig()) == 6.0

    def test_horizon_truncates(self):
        trace = trace_with_rewards(1.0, 2.0, 3.0)
        assert aggregate_return(trace, FitnessConfig(horizon=2)) == 3.0

    def test_discount_zero_keeps_only_the_first_reward(self):
        trace = trace_with_rewards(1.0, 50.0, 50.0)
        cfg = FitnessConfig(discount=0.0, aggregation="discounted_sum")
        assert aggregate_return(trace, cfg) == 1.0


class TestEvaluateFitness:
    def test_grid_single_start(self):
        env = make_grid_world()
        for pid, (letters, expected) in GRID_KNOWN_POLICIES.items():
            policy = TabularPolicy(grid_policy_genes(letters))
            assert evaluate_fitness(env, policy) == expected

    def test_hidden_exact_expectation(self):
        env = make_hidden_state_world()
        assert evaluate_fitness(env, TabularPolicy((1, 1, 0))) == 1.875
        assert evaluate_fitness(env, TabularPolicy((0, 0, 0))) == -2.0


class TestNormalizePayoff:
    def test_linear_inside_range(self):
        assert normalize_payoff(6.5, (-8.0, 17.0)) == pytest.approx(0.58)

    def test_clipped_outside_range(self):
        assert normalize_payoff(99.0, (0.0, 1.0)) == 1.0
        assert normalize_payoff(-99.0, (0.0, 1.0)) == 0.0


class TestProfitSharing:
    def test_strengths_move_toward_normalized_payoff(self):
        rules = [Rule((None,), 0, strength=0.5), Rule((None,), 1, strength=0.1)]
        profit_sharing_update(rules, payoff=1.0, beta=0.5)
        assert rules[0].strength == pytest.approx(0.75)
        assert rules[1].strength == pytest.approx(0.55)

    def test_unfired_rules_untouched(self):
        fired = [Rule((None,), 0, strength=0.2)]
        spectator = Rule((None,), 1, strength=0.9)
        profit_sharing_update(fired, payoff=1.0, beta=0.3)
        assert spectator.strength == 0.9

    def test_invalid_beta_rejected(self):
        with pytest.raises(ValueError):
            profit_sharing_update([], 1.0, beta=0.0)


class TestBucketBrigade:
    def make_policy(self):
        return RuleSetPolicy([
            Rule((None,), 0, strength=0.4),
            Rule((None,), 1, strength=0.6),
            Rule((None,), 0, strength=0.2),
        ])

    def test_bids_flow_backward_and_payoff_enters_at_the_end(self):
        policy = self.make_policy()
        trace = trace_with_rewards(0, 0, 0, rule_ids=[0, 1, 2])
        bucket_brigade_update(trace, policy, bid_fraction=0.5, final_payoff=1.0)
        # rule1 pays 0.3 to rule0; rule2 pays 0.1 to rule1; rule2 gets payoff 1.
        assert policy.rules[0].strength == pytest.approx(0.7)
        assert policy.rules[1].strength == pytest.approx(0.4)
        assert policy.rules[2].strength == pytest.approx(1.1)

    def test_missing_rule_ids_raise(self):
        policy = self.make_policy()
        with pytest.raises(MissingRuleIds):
            bucket_brigade_update(trace_with_rewards(0.0), policy, 0.5, 1.0)
        trace = trace_with_rewards(0.0, rule_ids=[DEFAULT_RULE_ID])
        with pytest.raises(MissingRuleIds):
            bucket_brigade_update(trace, policy, 0.5, 1.0)

    def test_invalid_bid_fraction_rejected(self):
        policy = self.make_policy()
        trace = trace_with_rewards(0.0, rule_ids=[0])
        with pytest.raises(ValueError):
            bucket_brigade_update(trace, policy, 1.0, 1.0)

    @settings(max_examples=300)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 8),
           st.floats(0.05, 0.95), st.floats(0.0, 1.0))
    def test_total_strength_conserved_up_to_injected_payoff(
            self, seed, chain_len, bid_fraction, payoff):
        rng = np.random.default_rng(seed)
        policy = RuleSetPolicy([
            Rule((None,), 0, strength=float(s)) for s in rng.random(5)
        ])
        rule_ids = [int(i) for i in rng.integers(0, 5, chain_len)]
        trace = trace_with_rewards(*([0.0] * chain_len), rule_ids=rule_ids)
        before = sum(r.strength for r in policy.rules)
        bucket_brigade_update(trace, policy, bid_fraction, payoff)
        after = sum(r.strength for r in policy.rules)
        assert after == pytest.approx(before + payoff)


class TestImplicitValueTable:
    def test_entries_are_mean_fitness_of_selectors(self):
        pop = Population([
            Individual((0, 1), fitness=4.0),
            Individual((0, 0), fitness=2.0),
            Individual((1, 0), fitness=6.0),
        ])
        table = implicit_value_estimate(pop, num_actions=2)
        assert table.get(0, 0) == pytest.approx(3.0)
        assert table.get(0, 1) == pytest.approx(6.0)
        assert table.get(1, 0) == pytest.approx(4.0)
        assert table.get(1, 1) == pytest.approx(4.0)

    def test_unselected_pairs_have_no_entry(self):
        pop = Population([Individual((0, 0), fitness=1.0)])
        table = implicit_value_estimate(pop, num_actions=2)
        assert table.get(0, 1) is None
        assert table.get(1, 1) is None
