"""Experience-triggered genetic operators for rule policies: specialization
of over-general rules after high-payoff episodes, covering of unmatched
observations, and crossover that keeps co-firing rules together."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .envs import EpisodeTrace, Observation
from .policies import DEFAULT_RULE_ID, Rule, RuleSetPolicy

LOW_STRENGTH_THRESHOLD = 0.3
HIGH_PAYOFF_PERCENTILE = 75.0


class NotTriggered(Exception):
    """Specialization preconditions (low strength, high payoff) unmet."""


class EmptyPolicy(Exception):
    pass


class NoTraces(Exception):
    """A parent carries no recorded episodes."""


@dataclass
class EpisodeRecord:
    trace: EpisodeTrace
    payoff: float
    high_payoff: bool


class ExperienceBuffer:
    """Bounded FIFO of recent episodes; the high-payoff flag marks episodes at
    or above the buffer's payoff percentile threshold."""

    def __init__(self, capacity: int = 32):
        self.episodes: deque[EpisodeRecord] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self.episodes)

    @property
    def payoff_threshold(self) -> float:
        if not self.episodes:
            raise NoTraces("empty experience buffer")
        return float(np.percentile([e.payoff for e in self.episodes], HIGH_PAYOFF_PERCENTILE))

    def record(self, trace: EpisodeTrace, payoff: float) -> None:
        self.episodes.append(EpisodeRecord(trace, payoff, False))
        threshold = self.payoff_threshold
        for e in self.episodes:
            e.high_payoff = e.payoff >= threshold

    def high_payoff_episodes(self) -> list[EpisodeRecord]:
        return [e for e in self.episodes if e.high_payoff]


def _shrink(lo: float, hi: float, center: int,
            clip_lo: float, clip_hi: float) -> tuple[int, int]:
    half = (hi - lo) / 4.0  # half of the halved width
    new_lo = max(clip_lo, center - half)
    new_hi = min(clip_hi, center + half)
    lo_i, hi_i = math.ceil(new_lo), math.floor(new_hi)
    if lo_i > hi_i:
        lo_i = hi_i = center
    return (lo_i, hi_i)


def specialize(
    rule: Rule,
    sensor_reading: Sequence[int],
    episode_payoff: float,
    sensor_bounds: Sequence[tuple[int, int]],
    strength_threshold: float = LOW_STRENGTH_THRESHOLD,
    payoff_threshold: float = 0.0,
    payoff_range: tuple[float, float] = (0.0, 1.0),
) -> Rule:
    """Narrow an over-general, low-strength rule toward the sensor reading it
    matched in a high-payoff episode.  Interval conditions shrink to half
    their width centered on the reading; don't-cares become intervals of half
    the sensor's full range.  The new strength is the normalized payoff."""
    from .credit import normalize_payoff

    if not rule.matches(sensor_reading):
        raise ValueError("rule does not match the triggering sensor reading")
    if rule.strength >= strength_threshold:
        raise NotTriggered(f"strength {rule.strength} is not below {strength_threshold}")
    if episode_payoff < payoff_threshold:
        raise NotTriggered(f"payoff {episode_payoff} is below {payoff_threshold}")
    new_conditions = []
    for cond, value, bounds in zip(rule.conditions, sensor_reading, sensor_bounds):
        if cond is None:
            lo, hi = bounds
            new_conditions.append(_shrink(lo, hi, value, lo, hi))
        elif isinstance(cond, tuple):
            lo, hi = cond
            new_conditions.append(_shrink(lo, hi, value, lo, hi))
        else:
            new_conditions.append(cond)  # exact values are already maximal
    return Rule(
        conditions=tuple(new_conditions),
        action=rule.action,
        strength=normalize_payoff(episode_payoff, payoff_range),
    )


def _widen(cond, value: int):
    if cond is None or (isinstance(cond, tuple) and cond[0] <= value <= cond[1]):
        return cond
    if isinstance(cond, tuple):
        return (min(cond[0], value), max(cond[1], value))
    if cond == value:
        return cond
    return (min(cond, value), max(cond, value))


def cover(policy: RuleSetPolicy, obs: Observation,
          rng: Optional[np.random.Generator] = None) -> Optional[Rule]:
    """When no rule matches ``obs``, clone the strongest rule and widen its
    conditions just enough to match; returns the appended rule, or ``None``
    when the observation was already covered."""
    if not policy.rules:
        raise EmptyPolicy("cannot cover with an empty rule list")
    if any(r.matches(obs.sensors) for r in policy.rules):
        return None
    strongest = max(policy.rules, key=lambda r: r.strength)
    new_rule = Rule(
        conditions=tuple(_widen(c, v) for c, v in zip(strongest.conditions, obs.sensors)),
        action=strongest.action,
        strength=strongest.strength,
    )
    policy.rules.append(new_rule)
    return new_rule


def _clusters_for(policy: RuleSetPolicy, buffer: ExperienceBuffer) -> list[set[int]]:
    """Rule-index groups that co-fired in a high-payoff episode, merged to
    transitive closure so atomicity is well-defined."""
    if len(buffer) == 0:
        raise NoTraces("parent has no recorded episodes")
    raw = []
    for record in buffer.high_payoff_episodes():
        fired = {
            r for r in record.trace.fired_rule_ids
            if r is not None and r != DEFAULT_RULE_ID and r < len(policy.rules)
        }
        if fired:
            raw.append(set(fired))
    merged: list[set[int]] = []
    for group in raw:
        absorbed = group
        rest = []
        for existing in merged:
            if existing & absorbed:
                absorbed = absorbed | existing
            else:
                rest.append(existing)
        merged = rest + [absorbed]
    return merged


def clustered_crossover(
    parent1: RuleSetPolicy,
    buffer1: ExperienceBuffer,
    parent2: RuleSetPolicy,
    buffer2: ExperienceBuffer,
    rng: np.random.Generator,
) -> tuple[RuleSetPolicy, RuleSetPolicy]:
    """Recombine two rule policies treating each high-payoff co-firing group
    as an atomic unit.  Clusters are dealt to the children alternately when
    that leaves both children enough room, and revert to their origin parent
    otherwise (always feasible); unclustered rules then fill the remaining
    slots in random order, so child sizes equal the parent sizes exactly."""
    units: list[list[Rule]] = []  # atomic blocks: one per cluster
    origin: list[int] = []        # which parent each block came from
    loose: list[Rule] = []
    for side, (parent, buffer) in enumerate(((parent1, buffer1),
                                             (parent2, buffer2))):
        clusters = _clusters_for(parent, buffer)
        clustered_ids = set().union(*clusters) if clusters else set()
        for cluster in clusters:
            units.append([parent.rules[i].clone() for i in sorted(cluster)])
            origin.append(side)
        loose.extend(parent.rules[i].clone() for i in range(len(parent.rules))
                     if i not in clustered_ids)
    sizes = (len(parent1.rules), len(parent2.rules))
    total = sum(len(u) for u in units)

    def feasible(assign: list[int]) -> bool:
        t0 = sum(len(u) for u, a in zip(units, assign) if a == 0)
        return t0 <= sizes[0] and total - t0 <= sizes[1]

    start = int(rng.integers(2))
    assign = [(start + i) % 2 for i in range(len(units))]
    if not feasible(assign):
        swapped = [1 - side for side in origin]
        if feasible(swapped) and rng.integers(2):
            assign = swapped
        else:
            assign = list(origin)  # clusters fit their own parent by construction
    children: tuple[list[Rule], list[Rule]] = ([], [])
    for unit, side in zip(units, assign):
        children[side].extend(unit)
    need0 = sizes[0] - len(children[0])
    order = [loose[int(i)] for i in rng.permutation(len(loose))]
    children[0].extend(order[:need0])
    children[1].extend(order[need0:])
    return (
        RuleSetPolicy(children[0], parent1.default_action),
        RuleSetPolicy(children[1], parent2.default_action),
    )
