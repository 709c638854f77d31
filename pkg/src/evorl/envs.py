"""Episodic decision-process environments and an exact episode runner.

Two deterministic benchmark worlds are provided:

- a 5x5 grid world (states ``a1`` .. ``e5``, actions right/down, payoff
  collected on entering each cell, episode ends when the agent moves off
  the grid), and
- a four-state world with aliased sensors: two distinct internal states
  produce the same ``blue`` observation but pay very different rewards.

Rewards follow a single convention everywhere: the reward recorded at step
``t`` is the payoff of the state occupied at ``t`` plus, on the step that
leaves the world, the exit payoff of that transition.  The entry payoff of
the start state is therefore always included in an episode's return.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence


class PolicyUndefined(Exception):
    """The policy produced no action for an observation and no fallback exists."""


class TooLarge(Exception):
    """Policy enumeration would exceed the configured bound."""


@dataclass(frozen=True)
class Observation:
    """A sensor reading: an index into the observation alphabet plus raw sensor values."""

    id: int
    label: str
    sensors: tuple[int, ...] = ()


@dataclass(frozen=True)
class Action:
    id: int
    label: str


@dataclass(frozen=True)
class StepOutcome:
    """Result of one transition: successor state (``None`` = terminal) and the
    payoff attached to it (entry payoff of the successor, or the exit payoff)."""

    next_state: Optional[str]
    reward: float

    @property
    def terminal(self) -> bool:
        return self.next_state is None


@dataclass(frozen=True)
class TraceStep:
    observation: Observation
    action: Action
    reward: float
    fired_rule_id: Optional[int] = None


@dataclass(frozen=True)
class EpisodeTrace:
    steps: tuple[TraceStep, ...]
    total_return: float

    @property
    def fired_rule_ids(self) -> tuple[Optional[int], ...]:
        return tuple(s.fired_rule_id for s in self.steps)


@dataclass(frozen=True)
class Environment:
    """A finite, episodic decision process.

    ``transitions`` maps ``(state, action_id)`` to a successor state or
    ``None`` for termination.  ``state_rewards`` is the payoff collected on
    entering a state (including the start state).  ``exit_rewards`` holds
    payoffs attached to terminating transitions (0 when omitted).
    """

    name: str
    states: tuple[str, ...]
    observations: tuple[Observation, ...]
    actions: tuple[Action, ...]
    transitions: Mapping[tuple[str, int], Optional[str]]
    state_rewards: Mapping[str, float]
    exit_rewards: Mapping[tuple[str, int], float]
    observe_map: Mapping[str, int]
    start_states: tuple[tuple[str, float], ...]
    sensor_bounds: tuple[tuple[int, int], ...]
    payoff_range: tuple[float, float]

    def __post_init__(self) -> None:
        total = sum(p for _, p in self.start_states)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"start probabilities sum to {total}, expected 1")
        for s in self.states:
            if s not in self.state_rewards:
                raise ValueError(f"no reward defined for state {s!r}")
            for a in self.actions:
                if (s, a.id) not in self.transitions:
                    raise ValueError(f"no successor for ({s!r}, {a.label!r})")
        labels = [o.label for o in self.observations]
        if len(set(labels)) != len(labels):
            raise ValueError("observation labels must be unique")

    @property
    def num_states(self) -> int:
        return len(self.states)

    @property
    def num_observations(self) -> int:
        return len(self.observations)

    @property
    def num_actions(self) -> int:
        return len(self.actions)

    def observe(self, state: str) -> Observation:
        return self.observations[self.observe_map[state]]

    def step(self, state: str, action_id: int) -> StepOutcome:
        nxt = self.transitions[(state, action_id)]
        if nxt is None:
            return StepOutcome(None, self.exit_rewards.get((state, action_id), 0.0))
        return StepOutcome(nxt, self.state_rewards[nxt])


GRID_COLUMNS = "abcde"
GRID_ROWS = (1, 2, 3, 4, 5)

# Payoff per cell, indexed [row-1][column]; rows 1..5, columns a..e.
GRID_PAYOFFS = (
    (0, 2, 1, -1, 1),
    (1, 1, 2, 0, 2),
    (3, -5, 4, 3, 1),
    (1, -2, 4, 1, 2),
    (1, 1, 2, 1, 1),
)


def make_grid_world() -> Environment:
    """The 5x5 grid world: actions R (column+1) and D (row+1), start at a1,
    episode ends when a move leaves the grid."""
    states = tuple(f"{c}{r}" for c in GRID_COLUMNS for r in GRID_ROWS)
    actions = (Action(0, "R"), Action(1, "D"))
    observations = []
    observe_map = {}
    rewards = {}
    transitions: dict[tuple[str, int], Optional[str]] = {}
    for i, s in enumerate(states):
        col = GRID_COLUMNS.index(s[0])
        row = int(s[1])
        observations.append(Observation(i, s, (col, row - 1)))
        observe_map[s] = i
        rewards[s] = float(GRID_PAYOFFS[row - 1][col])
        transitions[(s, 0)] = f"{GRID_COLUMNS[col + 1]}{row}" if col < 4 else None
        transitions[(s, 1)] = f"{s[0]}{row + 1}" if row < 5 else None
    return Environment(
        name="grid",
        states=states,
        observations=tuple(observations),
        actions=actions,
        transitions=transitions,
        state_rewards=rewards,
        exit_rewards={},
        observe_map=observe_map,
        start_states=(("a1", 1.0),),
        sensor_bounds=((0, 4), (0, 4)),
        payoff_range=(-8.0, 17.0),
    )


def make_hidden_state_world() -> Environment:
    """Four internal states whose two ``blue`` members are indistinguishable to
    the agent; all payoffs are attached to the terminating transitions."""
    states = ("red", "green", "blue1", "blue2")
    actions = (Action(0, "L"), Action(1, "R"))
    observations = (
        Observation(0, "red", (0,)),
        Observation(1, "green", (1,)),
        Observation(2, "blue", (2,)),
    )
    observe_map = {"red": 0, "green": 1, "blue1": 2, "blue2": 2}
    transitions: dict[tuple[str, int], Optional[str]] = {
        ("red", 0): None,
        ("red", 1): "blue1",
        ("green", 0): "blue2",
        ("green", 1): None,
        ("blue1", 0): None,
        ("blue1", 1): None,
        ("blue2", 0): None,
        ("blue2", 1): None,
    }
    exit_rewards = {
        ("red", 0): 0.0,
        ("green", 1): 0.75,
        ("blue1", 0): 3.0,
        ("blue1", 1): 1.0,
        ("blue2", 0): -4.0,
        ("blue2", 1): 1.0,
    }
    return Environment(
        name="hidden",
        states=states,
        observations=observations,
        actions=actions,
        transitions=transitions,
        state_rewards={s: 0.0 for s in states},
        exit_rewards=exit_rewards,
        observe_map=observe_map,
        start_states=(("red", 0.5), ("green", 0.5)),
        sensor_bounds=((0, 2),),
        payoff_range=(-4.0, 3.0),
    )


def run_episode(
    env: Environment,
    policy,
    start: str,
    rng=None,
    max_steps: int = 1000,
    on_no_match: Optional[Callable] = None,
) -> EpisodeTrace:
    """Follow ``policy`` from ``start`` until termination or ``max_steps``.

    ``policy`` exposes ``act(observation) -> action_id``; rule-set policies
    additionally expose ``act_with_rule`` so the fired rule id is recorded.
    ``on_no_match(policy, observation) -> action_id`` is the optional covering
    fallback; without it an unmatched observation raises ``PolicyUndefined``.
    """
    from . import policies as _policies

    if start not in env.state_rewards:
        raise ValueError(f"unknown start state {start!r}")
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    steps: list[TraceStep] = []
    state = start
    for _ in range(max_steps):
        obs = env.observe(state)
        rule_id: Optional[int] = None
        try:
            if hasattr(policy, "act_with_rule"):
                action_id, rule_id = policy.act_with_rule(obs)
            else:
                action_id = policy.act(obs)
        except _policies.NoMatch as exc:
            if on_no_match is None:
                raise PolicyUndefined(f"no action for observation {obs.label!r}") from exc
            action_id = on_no_match(policy, obs)
        out = env.step(state, action_id)
        reward = env.state_rewards[state] + (out.reward if out.terminal else 0.0)
        steps.append(TraceStep(obs, env.actions[action_id], reward, rule_id))
        if out.terminal:
            break
        state = out.next_state
    return EpisodeTrace(tuple(steps), sum(s.reward for s in steps))


def enumerate_policies(env: Environment, limit: int = 2**20):
    """All deterministic observation-conditioned policies of ``env``."""
    from .policies import TabularPolicy

    count = env.num_actions ** env.num_observations
    if count > limit:
        raise TooLarge(
            f"{env.num_actions}^{env.num_observations} = {count} policies exceeds bound {limit}"
        )
    action_ids = range(env.num_actions)
    return [
        TabularPolicy(genes)
        for genes in itertools.product(action_ids, repeat=env.num_observations)
    ]


def expected_return(env: Environment, policy, max_steps: int = 1000) -> float:
    """Start-distribution expectation of the single-episode return."""
    return sum(
        p * run_episode(env, policy, s, max_steps=max_steps).total_return
        for s, p in env.start_states
    )
