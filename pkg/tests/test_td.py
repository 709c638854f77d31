"""Tabular temporal-difference baseline and the exact oracle."""

import time

import pytest

from evorl.envs import make_grid_world, make_hidden_state_world
from evorl.policies import TabularPolicy
from evorl.reference import (
    GRID_REFERENCE_Q,
    HIDDEN_VALUE_FUNCTION_GENES,
)
from evorl.td import (
    QTable,
    TDConfig,
    ValueTable,
    greedy_policy,
    q_update,
    run_q_learning,
    td0_update,
    value_iteration_oracle,
)


class TestQUpdate:
    def test_moves_toward_target(self):
        q = QTable(2)
        q.set("s", 0, 1.0)
        q.set("t", 0, 4.0)
        q.set("t", 1, 6.0)
        q_update(q, "s", 0, r=2.0, s_next="t", alpha=0.5)
        # target = 2 + max(4, 6) = 8; new = 1 + 0.5 * (8 - 1)
        assert q.get("s", 0) == pytest.approx(4.5)

    def test_terminal_successor_bootstraps_zero(self):
        q = QTable(2)
        q_update(q, "s", 0, r=3.0, s_next=None, alpha=1.0)
        assert q.get("s", 0) == 3.0

    def test_harmonic_schedule_is_a_running_mean(self):
        q = QTable(1)
        for i, r in enumerate((2.0, 4.0, 9.0), start=1):
            q_update(q, "s", 0, r, None, alpha=1.0 / i)
        assert q.get("s", 0) == pytest.approx(5.0)


class TestTD0:
    def test_update(self):
        v = ValueTable()
        v.values["t"] = 10.0
        td0_update(v, "s", "t", r=1.0, alpha=0.5)
        assert v.get("s") == pytest.approx(5.5)


class TestGreedyPolicy:
    def test_ties_break_to_the_lowest_action(self):
        q = QTable(2)
        assert greedy_policy(q, 3).genes == (0, 0, 0)

    def test_argmax_per_observation(self):
        q = QTable(2)
        q.set(1, 1, 2.0)
        assert greedy_policy(q, 2).genes == (0, 1)


class TestOracle:
    def test_grid_q_table_matches_reference_exactly(self):
        start = time.monotonic()
        env = make_grid_world()
        q = value_iteration_oracle(env)
        labels = {a.label: a.id for a in env.actions}
        for (state, letter), expected in GRID_REFERENCE_Q.items():
            assert q.get(state, labels[letter]) == expected
        assert time.monotonic() - start < 1.0

    def test_hidden_true_state_values(self):
        env = make_hidden_state_world()
        q = value_iteration_oracle(env)
        assert q.get("blue1", 0) == 3.0
        assert q.get("blue2", 0) == -4.0
        assert q.get("red", 1) == 3.0  # red, R reaches blue1 then L


class TestQLearning:
    def test_converges_to_aliased_averages(self):
        env = make_hidden_state_world()
        q = run_q_learning(env, TDConfig(seed=0, episodes=5000))
        blue = env.observe_map["blue1"]
        # Aliasing averages blue1 (+3) and blue2 (-4) under L.
        assert q.get(blue, 0) == pytest.approx(-0.5, abs=0.3)
        assert q.get(blue, 1) == pytest.approx(1.0, abs=0.05)
        greedy = greedy_policy(q, env.num_observations)
        assert greedy.genes == HIDDEN_VALUE_FUNCTION_GENES

    def test_episode_returns_are_logged(self):
        env = make_hidden_state_world()
        returns = []
        run_q_learning(env, TDConfig(seed=0, episodes=50),
                       episode_returns=returns)
        assert len(returns) == 50
        assert all(-4.0 <= r <= 3.0 for r in returns)

    def test_grid_greedy_policy_is_optimal_after_learning(self):
        env = make_grid_world()
        q = run_q_learning(env, TDConfig(seed=1, episodes=3000, epsilon=0.2))
        policy = greedy_policy(q, env.num_observations)
        from evorl.envs import run_episode
        assert run_episode(env, policy, "a1").total_return == 17.0

    def test_invalid_configs_rejected(self):
        with pytest.raises(ValueError):
            TDConfig(learning_rate=0.0)
        with pytest.raises(ValueError):
            TDConfig(epsilon=2.0)
