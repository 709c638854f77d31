"""World construction, transition semantics, and the episode runner."""

import pytest

from evorl.envs import (
    PolicyUndefined,
    TooLarge,
    enumerate_policies,
    expected_return,
    make_grid_world,
    make_hidden_state_world,
    run_episode,
)
from evorl.policies import TabularPolicy


@pytest.fixture
def grid():
    return make_grid_world()


@pytest.fixture
def hidden():
    return make_hidden_state_world()


class TestGridWorld:
    def test_alphabets(self, grid):
        assert grid.num_states == 25
        assert grid.states[0] == "a1"
        assert grid.states[-1] == "e5"
        assert [a.label for a in grid.actions] == ["R", "D"]
        # Fully observable: one observation per state.
        assert grid.num_observations == 25

    def test_column_major_state_order(self, grid):
        assert grid.states[:6] == ("a1", "a2", "a3", "a4", "a5", "b1")

    def test_step_moves_right_and_down(self, grid):
        out = grid.step("a1", 0)
        assert out.next_state == "b1"
        assert out.reward == 2.0  # entry payoff of b1
        out = grid.step("a1", 1)
        assert out.next_state == "a2"
        assert out.reward == 1.0

    def test_step_off_the_grid_terminates(self, grid):
        assert grid.step("e3", 0).terminal
        assert grid.step("c5", 1).terminal
        assert grid.step("e3", 0).reward == 0.0

    def test_sensor_values_are_column_and_row(self, grid):
        obs = grid.observe("c4")
        assert obs.sensors == (2, 3)
        assert grid.sensor_bounds == ((0, 4), (0, 4))

    def test_optimal_path_collects_17(self, grid):
        # R,D,R,D,D,R,R,D visits a1,b1,b2,c2,c3,c4,d4,e4,e5.
        total, state = grid.state_rewards["a1"], "a1"
        for action in (0, 1, 0, 1, 1, 0, 0, 1):
            out = grid.step(state, action)
            total += out.reward
            state = out.next_state
        assert state == "e5"
        assert total == 17.0

    def test_episode_return_matches_reward_sum(self, grid):
        policy = TabularPolicy([0] * 25)  # always right: a1..e1 then off
        trace = run_episode(grid, policy, "a1")
        assert len(trace.steps) == 5
        assert trace.total_return == 0 + 2 + 1 - 1 + 1


class TestHiddenWorld:
    def test_aliasing(self, hidden):
        assert hidden.num_states == 4
        assert hidden.num_observations == 3
        assert hidden.observe("blue1").label == "blue"
        assert hidden.observe("blue2").label == "blue"

    def test_exit_rewards(self, hidden):
        assert hidden.step("blue1", 0).reward == 3.0
        assert hidden.step("blue2", 0).reward == -4.0
        assert hidden.step("blue1", 1).reward == 1.0
        assert hidden.step("green", 1).reward == 0.75

    def test_start_distribution(self, hidden):
        assert dict(hidden.start_states) == {"red": 0.5, "green": 0.5}

    def test_optimal_policy_expected_return(self, hidden):
        assert expected_return(hidden, TabularPolicy((1, 1, 0))) == 1.875

    def test_value_function_policy_expected_return(self, hidden):
        assert expected_return(hidden, TabularPolicy((1, 0, 1))) == 1.0


class TestRunEpisode:
    def test_unknown_start_rejected(self, grid):
        with pytest.raises(ValueError):
            run_episode(grid, TabularPolicy([0] * 25), "z9")

    def test_max_steps_truncates(self, grid):
        trace = run_episode(grid, TabularPolicy([1] * 25), "a1", max_steps=2)
        assert len(trace.steps) == 2

    def test_policy_without_action_raises(self, hidden):
        class Headless:
            def act(self, obs):
                from evorl.policies import NoMatch
                raise NoMatch(obs.label)

        with pytest.raises(PolicyUndefined):
            run_episode(hidden, Headless(), "red")

    def test_covering_fallback_is_used(self, hidden):
        class Headless:
            def act(self, obs):
                from evorl.policies import NoMatch
                raise NoMatch(obs.label)

        trace = run_episode(hidden, Headless(), "red",
                            on_no_match=lambda p, o: 0)
        assert trace.total_return == 0.0


class TestEnumeration:
    def test_hidden_policy_count(self, hidden):
        policies = enumerate_policies(hidden)
        assert len(policies) == 8
        assert len({p.genes for p in policies}) == 8

    def test_limit_guard(self, grid):
        with pytest.raises(TooLarge):
            enumerate_policies(grid, limit=100)
