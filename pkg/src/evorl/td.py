"""Tabular value-function baseline: TD(0), Q-learning over observations,
greedy policy extraction, and an exact backward-induction oracle over true
states used for golden-data checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Optional, Union

import numpy as np

from .envs import Environment
from .policies import TabularPolicy


class NonEpisodic(Exception):
    """Value iteration failed to reach a fixpoint within the sweep bound."""


@dataclass
class QTable:
    """Per (key, action) value estimates with visit counts; entries are
    lazily zero."""

    num_actions: int
    values: dict = field(default_factory=dict)
    visit_counts: dict = field(default_factory=dict)

    def get(self, key: Hashable, action: int) -> float:
        return self.values.get((key, action), 0.0)

    def set(self, key: Hashable, action: int, value: float) -> None:
        self.values[(key, action)] = value

    def best_value(self, key: Hashable) -> float:
        return max(self.get(key, a) for a in range(self.num_actions))

    def best_action(self, key: Hashable) -> int:
        best = 0
        for a in range(1, self.num_actions):
            if self.get(key, a) > self.get(key, best):
                best = a
        return best

    def record_visit(self, key: Hashable, action: int) -> int:
        count = self.visit_counts.get((key, action), 0) + 1
        self.visit_counts[(key, action)] = count
        return count


@dataclass
class ValueTable:
    values: dict = field(default_factory=dict)

    def get(self, key: Hashable) -> float:
        return self.values.get(key, 0.0)


@dataclass
class TDConfig:
    learning_rate: Union[float, str] = "harmonic"  # fixed alpha, or 1/k per pair
    epsilon: float = 0.1
    episodes: int = 10_000
    seed: int = 0
    max_steps: int = 1000

    def __post_init__(self) -> None:
        if isinstance(self.learning_rate, float) and not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in (0, 1]")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")


def q_update(q: QTable, s: Hashable, a: int, r: float,
             s_next: Optional[Hashable], alpha: float) -> None:
    """Single-sample update toward r + max_a' Q(s', a'); a terminal successor
    contributes 0."""
    bootstrap = 0.0 if s_next is None else q.best_value(s_next)
    current = q.get(s, a)
    q.set(s, a, current + alpha * (bootstrap - current + r))


def td0_update(v: ValueTable, s: Hashable, s_next: Optional[Hashable],
               r: float, alpha: float) -> None:
    nxt = 0.0 if s_next is None else v.get(s_next)
    v.values[s] = v.get(s) + alpha * (nxt - v.get(s) + r)


def run_q_learning(env: Environment, cfg: TDConfig,
                   episode_returns: Optional[list] = None) -> QTable:
    """Epsilon-greedy Q-learning keyed by observation ids, so aliased states
    share one entry.  Greedy ties break toward the lowest action id.  When a
    list is passed as ``episode_returns`` each episode's total reward is
    appended to it."""
    rng = np.random.default_rng(cfg.seed)
    q = QTable(env.num_actions)
    starts = [s for s, _ in env.start_states]
    probs = [p for _, p in env.start_states]
    harmonic = cfg.learning_rate == "harmonic"
    for _ in range(cfg.episodes):
        state = starts[int(rng.choice(len(starts), p=probs))]
        episode_total = 0.0
        for _ in range(cfg.max_steps):
            obs_id = env.observe_map[state]
            if rng.random() < cfg.epsilon:
                action = int(rng.integers(env.num_actions))
            else:
                action = q.best_action(obs_id)
            out = env.step(state, action)
            reward = env.state_rewards[state] + (out.reward if out.terminal else 0.0)
            next_obs = None if out.terminal else env.observe_map[out.next_state]
            count = q.record_visit(obs_id, action)
            alpha = 1.0 / count if harmonic else cfg.learning_rate
            q_update(q, obs_id, action, reward, next_obs, alpha)
            episode_total += reward
            if out.terminal:
                break
            state = out.next_state
        if episode_returns is not None:
            episode_returns.append(episode_total)
    return q


def greedy_policy(q: QTable, num_observations: int) -> TabularPolicy:
    """Per-observation argmax of the Q-table, ties toward the lowest action id."""
    return TabularPolicy(tuple(q.best_action(o) for o in range(num_observations)))


def value_iteration_oracle(env: Environment, max_sweeps: int = 10_000) -> QTable:
    """Exact fixpoint of Q(s, a) = r(s) + V(successor) over true states, with
    terminal transitions contributing their exit payoff and value 0."""
    q = QTable(env.num_actions)
    for _ in range(max_sweeps):
        changed = False
        for s in env.states:
            for a in range(env.num_actions):
                nxt = env.transitions[(s, a)]
                if nxt is None:
                    tail = env.exit_rewards.get((s, a), 0.0)
                else:
                    tail = q.best_value(nxt)
                value = env.state_rewards[s] + tail
                if value != q.get(s, a):
                    q.set(s, a, value)
                    changed = True
        if not changed:
            return q
    raise NonEpisodic(f"no fixpoint within {max_sweeps} sweeps")
