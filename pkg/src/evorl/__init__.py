"""Policy-space evolutionary reinforcement learning with a tabular
temporal-difference baseline, on two small benchmark worlds."""

from .envs import (
    Environment,
    EpisodeTrace,
    enumerate_policies,
    expected_return,
    make_grid_world,
    make_hidden_state_world,
    run_episode,
)
from .policies import NeuralPolicy, Rule, RuleSetPolicy, TabularPolicy

__all__ = [
    "Environment",
    "EpisodeTrace",
    "NeuralPolicy",
    "Rule",
    "RuleSetPolicy",
    "TabularPolicy",
    "enumerate_policies",
    "expected_return",
    "make_grid_world",
    "make_hidden_state_world",
    "run_episode",
]

__version__ = "0.1.0"
