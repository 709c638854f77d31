"""Policy representations: action tables, strength-weighted rule sets, and
small feed-forward networks, plus chromosome encode/decode for the EA."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .envs import Observation


class NoMatch(Exception):
    """No rule matches the observation and no default action is configured."""


class SchemaMismatch(Exception):
    """Chromosome shape is inconsistent with the decoding schema."""


# A per-sensor predicate: None matches anything, an int matches by equality,
# and an (lo, hi) pair matches by closed-interval containment.
Condition = Union[None, int, tuple[int, int]]

DONT_CARE: Condition = None

# Rule id recorded when the default action fires instead of a listed rule.
DEFAULT_RULE_ID = -1


def condition_matches(cond: Condition, value: int) -> bool:
    if cond is None:
        return True
    if isinstance(cond, tuple):
        lo, hi = cond
        return lo <= value <= hi
    return cond == value


@dataclass
class Rule:
    """A condition-action rule with a non-negative strength used for conflict
    resolution and credit assignment."""

    conditions: tuple[Condition, ...]
    action: int
    strength: float = 0.5

    def __post_init__(self) -> None:
        for cond in self.conditions:
            if isinstance(cond, tuple) and cond[0] > cond[1]:
                raise ValueError(f"interval {cond} has lo > hi")
        if self.strength < 0:
            raise ValueError("strength must be >= 0")

    def matches(self, sensors: Sequence[int]) -> bool:
        return all(condition_matches(c, v) for c, v in zip(self.conditions, sensors))

    def clone(self) -> "Rule":
        return replace(self)


@dataclass(frozen=True)
class TabularPolicy:
    """One action gene per observation id."""

    genes: tuple[int, ...]

    def __init__(self, genes):
        object.__setattr__(self, "genes", tuple(int(g) for g in genes))

    def act(self, obs: Observation) -> int:
        return self.genes[obs.id]


@dataclass
class RuleSetPolicy:
    """An ordered rule list; the max-strength matching rule fires (ties break
    toward the earliest rule)."""

    rules: list[Rule]
    default_action: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.rules:
            raise ValueError("rule list must be non-empty")

    def act_with_rule(self, obs: Observation) -> tuple[int, int]:
        best: Optional[tuple[int, Rule]] = None
        for i, rule in enumerate(self.rules):
            if rule.matches(obs.sensors):
                if best is None or rule.strength > best[1].strength:
                    best = (i, rule)
        if best is not None:
            return best[1].action, best[0]
        if self.default_action is not None:
            return self.default_action, DEFAULT_RULE_ID
        raise NoMatch(f"no rule matches observation {obs.label!r}")

    def act(self, obs: Observation) -> int:
        return self.act_with_rule(obs)[0]

    def clone(self) -> "RuleSetPolicy":
        return RuleSetPolicy([r.clone() for r in self.rules], self.default_action)


@dataclass(frozen=True)
class NeuralSchema:
    """Dimensions and input encoding of a one-hidden-layer network policy."""

    num_inputs: int
    hidden_size: int
    num_actions: int
    encoding: str = "obs"  # "obs": one-hot observation id; "sensors": factored one-hot
    sensor_bounds: Optional[tuple[tuple[int, int], ...]] = None
    has_crossover_gene: bool = False

    @property
    def weight_count(self) -> int:
        return (self.num_inputs + 1) * self.hidden_size + (self.hidden_size + 1) * self.num_actions


def sensor_input_size(sensor_bounds: Sequence[tuple[int, int]]) -> int:
    return sum(hi - lo + 1 for lo, hi in sensor_bounds)


@dataclass
class NeuralPolicy:
    """Flat weight vector interpreted as input->hidden (tanh) and
    hidden->output (linear) layers; the greedy output is the action."""

    weights: np.ndarray
    schema: NeuralSchema
    crossover_gene: Optional[float] = None

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (self.schema.weight_count,):
            raise ValueError(
                f"expected {self.schema.weight_count} weights, got {self.weights.shape}"
            )
        if self.crossover_gene is not None and not 0.0 <= self.crossover_gene <= 1.0:
            raise ValueError("crossover_gene must lie in [0, 1]")

    def encode_input(self, obs: Observation) -> np.ndarray:
        x = np.zeros(self.schema.num_inputs)
        if self.schema.encoding == "obs":
            x[obs.id] = 1.0
        else:
            offset = 0
            for value, (lo, hi) in zip(obs.sensors, self.schema.sensor_bounds):
                x[offset + value - lo] = 1.0
                offset += hi - lo + 1
        return x

    def act(self, obs: Observation) -> int:
        ni, h, na = self.schema.num_inputs, self.schema.hidden_size, self.schema.num_actions
        split = (ni + 1) * h
        w1 = self.weights[:split].reshape(ni + 1, h)
        w2 = self.weights[split:].reshape(h + 1, na)
        x = np.append(self.encode_input(obs), 1.0)
        hidden = np.tanh(x @ w1)
        outputs = np.append(hidden, 1.0) @ w2
        return int(np.argmax(outputs))

    def clone(self) -> "NeuralPolicy":
        return NeuralPolicy(self.weights.copy(), self.schema, self.crossover_gene)


@dataclass(frozen=True)
class TabularSchema:
    num_observations: int
    num_actions: int


@dataclass(frozen=True)
class RuleSchema:
    num_sensors: int
    num_actions: int
    default_action: Optional[int] = None


Schema = Union[TabularSchema, RuleSchema, NeuralSchema]


def encode(policy) -> Union[tuple, np.ndarray]:
    """Map a policy to its chromosome; inverse of :func:`decode`."""
    if isinstance(policy, TabularPolicy):
        return policy.genes
    if isinstance(policy, RuleSetPolicy):
        return tuple(r.clone() for r in policy.rules)
    if isinstance(policy, NeuralPolicy):
        if policy.schema.has_crossover_gene:
            if policy.crossover_gene is None:
                raise ValueError("schema expects a crossover gene but policy has none")
            return np.append(policy.weights, policy.crossover_gene)
        return policy.weights.copy()
    raise TypeError(f"not a policy: {policy!r}")


def decode(chromosome, schema: Schema):
    if isinstance(schema, TabularSchema):
        genes = tuple(chromosome)
        if len(genes) != schema.num_observations:
            raise SchemaMismatch(
                f"expected {schema.num_observations} genes, got {len(genes)}"
            )
        if any(not 0 <= g < schema.num_actions for g in genes):
            raise SchemaMismatch("gene is not a valid action id")
        return TabularPolicy(genes)
    if isinstance(schema, RuleSchema):
        rules = [r.clone() for r in chromosome]
        for r in rules:
            if len(r.conditions) != schema.num_sensors:
                raise SchemaMismatch(
                    f"rule has {len(r.conditions)} conditions, expected {schema.num_sensors}"
                )
            if not 0 <= r.action < schema.num_actions:
                raise SchemaMismatch(f"rule action {r.action} out of range")
        return RuleSetPolicy(rules, schema.default_action)
    if isinstance(schema, NeuralSchema):
        vec = np.asarray(chromosome, dtype=float)
        expected = schema.weight_count + (1 if schema.has_crossover_gene else 0)
        if vec.shape != (expected,):
            raise SchemaMismatch(f"expected {expected} reals, got {vec.shape}")
        if schema.has_crossover_gene:
            return NeuralPolicy(vec[:-1], schema, float(vec[-1]))
        return NeuralPolicy(vec, schema)
    raise TypeError(f"unknown schema: {schema!r}")
