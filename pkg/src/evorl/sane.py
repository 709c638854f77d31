"""Two-population cooperative co-evolution of network policies: a neuron
population supplies hidden units, a blueprint population supplies pointer
lists that assemble neurons into complete networks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .envs import Environment, expected_return
from .evolution import one_point_crossover
from .policies import NeuralPolicy, NeuralSchema


class DanglingRef(Exception):
    """Blueprint points outside the neuron population."""


@dataclass
class Neuron:
    in_weights: np.ndarray   # one per network input, plus bias
    out_weights: np.ndarray  # one per action
    fitness: Optional[float] = None
    participation: list = field(default_factory=list)

    def clone(self) -> "Neuron":
        return Neuron(self.in_weights.copy(), self.out_weights.copy())


@dataclass
class Blueprint:
    neuron_refs: list[int]
    fitness: Optional[float] = None

    def clone(self) -> "Blueprint":
        return Blueprint(list(self.neuron_refs))


@dataclass
class SaneConfig:
    neuron_pop_size: int = 50
    blueprint_pop_size: int = 20
    hidden_size: int = 4
    elite_fraction: float = 0.25
    top_participation: int = 5
    generations: int = 100
    seed: int = 0
    mutation_rate: float = 0.1
    mutation_sigma: float = 0.5
    weight_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.hidden_size > self.neuron_pop_size:
            raise ValueError("hidden_size cannot exceed neuron_pop_size")
        if not 0.0 < self.elite_fraction < 1.0:
            raise ValueError("elite_fraction must lie in (0, 1)")


def network_schema(env: Environment, hidden_size: int) -> NeuralSchema:
    return NeuralSchema(
        num_inputs=env.num_observations,
        hidden_size=hidden_size,
        num_actions=env.num_actions,
        encoding="obs",
    )


def random_neuron(schema: NeuralSchema, rng: np.random.Generator,
                  scale: float = 1.0) -> Neuron:
    return Neuron(
        in_weights=rng.normal(0.0, scale, schema.num_inputs + 1),
        out_weights=rng.normal(0.0, scale, schema.num_actions),
    )


def random_blueprint(hidden_size: int, neuron_pop_size: int,
                     rng: np.random.Generator) -> Blueprint:
    return Blueprint([int(i) for i in rng.integers(0, neuron_pop_size, hidden_size)])


def init_populations(env: Environment, cfg: SaneConfig,
                     rng: np.random.Generator) -> tuple[list[Neuron], list[Blueprint]]:
    schema = network_schema(env, cfg.hidden_size)
    neurons = [random_neuron(schema, rng, cfg.weight_scale) for _ in range(cfg.neuron_pop_size)]
    blueprints = [random_blueprint(cfg.hidden_size, cfg.neuron_pop_size, rng)
                  for _ in range(cfg.blueprint_pop_size)]
    return neurons, blueprints


def assemble_network(bp: Blueprint, neurons: list[Neuron],
                     schema: NeuralSchema) -> NeuralPolicy:
    """Build a network whose hidden units are the referenced neurons; a
    neuron referenced twice contributes twice.  Output biases are zero."""
    ni, h, na = schema.num_inputs, schema.hidden_size, schema.num_actions
    w1 = np.zeros((ni + 1, h))
    w2 = np.zeros((h + 1, na))
    for slot, ref in enumerate(bp.neuron_refs):
        if not 0 <= ref < len(neurons):
            raise DanglingRef(f"blueprint ref {ref} outside population of {len(neurons)}")
        w1[:, slot] = neurons[ref].in_weights
        w2[slot, :] = neurons[ref].out_weights
    return NeuralPolicy(np.concatenate([w1.ravel(), w2.ravel()]), schema)


def neuron_diversity(neurons: list[Neuron]) -> float:
    """Mean pairwise euclidean distance between neuron weight vectors."""
    flat = np.array([np.concatenate([n.in_weights, n.out_weights]) for n in neurons])
    total, pairs = 0.0, 0
    for i in range(len(flat)):
        diffs = flat[i + 1:] - flat[i]
        total += float(np.sqrt((diffs**2).sum(axis=1)).sum())
        pairs += len(diffs)
    return total / pairs if pairs else 0.0


def _breed(ranked, elite_count: int, crossover_fn, mutate_fn,
           rng: np.random.Generator):
    """Keep the elites in rank order at the head; fill the rest by crossing
    two random elites and mutating the result."""
    new = [item.clone() for item in ranked[:elite_count]]
    while len(new) < len(ranked):
        i = int(rng.integers(elite_count))
        j = int(rng.integers(elite_count))
        child = crossover_fn(ranked[i], ranked[j], rng)
        new.append(mutate_fn(child, rng))
    return new


def sane_generation(
    neurons: list[Neuron],
    blueprints: list[Blueprint],
    env: Environment,
    cfg: SaneConfig,
    rng: np.random.Generator,
    fitness_fn: Optional[Callable] = None,
) -> tuple[list[Neuron], list[Blueprint]]:
    """Evaluate every blueprint's network, credit neurons by the mean of the
    top networks they joined, then breed both populations aggressively.
    Fitness fields of the incoming populations are filled in place."""
    schema = network_schema(env, cfg.hidden_size)
    fitness_fn = fitness_fn or (lambda policy: expected_return(env, policy))
    for n in neurons:
        n.participation = []
        n.fitness = None
    for bp in blueprints:
        policy = assemble_network(bp, neurons, schema)
        bp.fitness = fitness_fn(policy)
        for ref in set(bp.neuron_refs):
            neurons[ref].participation.append(bp.fitness)
    floor = min(bp.fitness for bp in blueprints)
    for n in neurons:
        if n.participation:
            top = sorted(n.participation, reverse=True)[: cfg.top_participation]
            n.fitness = float(np.mean(top))
        else:
            n.fitness = floor

    neuron_elites = max(1, int(cfg.elite_fraction * len(neurons)))
    bp_elites = max(1, int(cfg.elite_fraction * len(blueprints)))
    ranked_neurons = sorted(neurons, key=lambda n: -n.fitness)
    ranked_bps = sorted(blueprints, key=lambda b: -b.fitness)

    def cross_neuron(a: Neuron, b: Neuron, r) -> Neuron:
        flat_a = np.concatenate([a.in_weights, a.out_weights])
        flat_b = np.concatenate([b.in_weights, b.out_weights])
        child = one_point_crossover(flat_a, flat_b, r)[0]
        k = len(a.in_weights)
        return Neuron(child[:k], child[k:])

    def mutate_neuron(n: Neuron, r) -> Neuron:
        for vec in (n.in_weights, n.out_weights):
            mask = r.random(vec.shape) < cfg.mutation_rate
            vec[mask] += r.normal(0.0, cfg.mutation_sigma, int(mask.sum()))
        return n

    def cross_bp(a: Blueprint, b: Blueprint, r) -> Blueprint:
        if len(a.neuron_refs) < 2:
            return a.clone()
        refs = one_point_crossover(tuple(a.neuron_refs), tuple(b.neuron_refs), r)[0]
        return Blueprint(list(refs))

    def mutate_bp(bp: Blueprint, r) -> Blueprint:
        for i in range(len(bp.neuron_refs)):
            if r.random() < cfg.mutation_rate:
                bp.neuron_refs[i] = int(r.integers(len(neurons)))
        return bp

    new_neurons = _breed(ranked_neurons, neuron_elites, cross_neuron, mutate_neuron, rng)
    new_blueprints = _breed(ranked_bps, bp_elites, cross_bp, mutate_bp, rng)
    return new_neurons, new_blueprints


def run_sane(env: Environment, cfg: SaneConfig,
             fitness_fn: Optional[Callable] = None):
    """Full co-evolution run; yields per-generation (best, mean, diversity)
    stats and returns them with the final best blueprint fitness."""
    rng = np.random.default_rng(cfg.seed)
    neurons, blueprints = init_populations(env, cfg, rng)
    history = []
    best_ever = -np.inf
    for gen in range(cfg.generations):
        neurons2, blueprints2 = sane_generation(neurons, blueprints, env, cfg, rng, fitness_fn)
        fits = [bp.fitness for bp in blueprints]
        best_ever = max(best_ever, max(fits))
        history.append({
            "generation": gen,
            "best_fitness": max(fits),
            "mean_fitness": float(np.mean(fits)),
            "neuron_diversity": neuron_diversity(neurons),
        })
        neurons, blueprints = neurons2, blueprints2
    return history, best_ever
