"""Generic EA kernel: populations, selection, variation, the generational
loop, a steady-state replace-worst variant with an adaptive crossover gene,
and random immigrants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .policies import Rule

PROPORTIONAL_EPS = 1e-6


class AllZeroFitness(Exception):
    """Total selection weight is zero; fall back to uniform selection."""


class LengthMismatch(Exception):
    pass


class MissingCrossoverGene(Exception):
    pass


@dataclass
class Individual:
    chromosome: object
    fitness: Optional[float] = None
    age: int = 0
    crossover_gene: Optional[float] = None


@dataclass
class Population:
    members: list[Individual]
    generation: int = 0

    @property
    def size(self) -> int:
        return len(self.members)

    def best(self) -> Individual:
        return max(self.members, key=lambda m: m.fitness)


@dataclass
class EAConfig:
    population_size: int = 50
    crossover_prob: float = 0.8
    mutation_rate: float = 0.01
    selection: str = "tournament"  # or "proportional"
    tournament_k: int = 2
    elitism: int = 0
    immigrant_fraction: float = 0.0
    generations: int = 50
    seed: int = 0
    mutation_sigma: float = 0.3
    gene_symbols: Optional[int] = None  # alphabet size for discrete chromosomes

    def __post_init__(self) -> None:
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ValueError("crossover_prob must lie in [0, 1]")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if not 0.0 <= self.immigrant_fraction <= 0.3:
            raise ValueError("immigrant_fraction must lie in [0, 0.3]")
        if self.elitism > self.population_size:
            raise ValueError("elitism cannot exceed population_size")
        if self.selection not in ("tournament", "proportional"):
            raise ValueError(f"unknown selection scheme {self.selection!r}")


def proportional_probabilities(pop: Population) -> np.ndarray:
    """Relative-fitness selection weights.  Fitnesses are shifted upward only
    when negatives are present, so non-negative populations select at the raw
    fitness ratios."""
    f = np.array([m.fitness for m in pop.members], dtype=float)
    if f.min() < 0:
        f = f - f.min() + PROPORTIONAL_EPS
    total = f.sum()
    if total == 0:
        raise AllZeroFitness("all selection weights are zero")
    return f / total


def select_proportional(pop: Population, rng: np.random.Generator) -> Individual:
    probs = proportional_probabilities(pop)
    return pop.members[int(rng.choice(len(probs), p=probs))]


def select_tournament(pop: Population, k: int, rng: np.random.Generator) -> Individual:
    if k < 1:
        raise ValueError("tournament size must be >= 1")
    drawn = rng.integers(0, pop.size, size=k)
    best = None
    for i in sorted(int(j) for j in drawn):  # ascending index => earlier wins ties
        if best is None or pop.members[i].fitness > pop.members[best].fitness:
            best = i
    return pop.members[best]


def _select(pop: Population, cfg: EAConfig, rng: np.random.Generator) -> Individual:
    if cfg.selection == "proportional":
        try:
            return select_proportional(pop, rng)
        except AllZeroFitness:
            return pop.members[int(rng.integers(pop.size))]
    return select_tournament(pop, cfg.tournament_k, rng)


def clone_chromosome(chromosome):
    if isinstance(chromosome, np.ndarray):
        return chromosome.copy()
    if isinstance(chromosome, tuple) and chromosome and isinstance(chromosome[0], Rule):
        return tuple(r.clone() for r in chromosome)
    return tuple(chromosome)


def one_point_crossover(p1, p2, rng: np.random.Generator):
    """Swap tails at a cut drawn uniformly from [1, len-1]."""
    if len(p1) != len(p2):
        raise LengthMismatch(f"parents have lengths {len(p1)} and {len(p2)}")
    if len(p1) < 2:
        raise LengthMismatch("chromosomes must have at least 2 genes to cross")
    cut = int(rng.integers(1, len(p1)))
    if isinstance(p1, np.ndarray):
        return (
            np.concatenate([p1[:cut], p2[cut:]]),
            np.concatenate([p2[:cut], p1[cut:]]),
        )
    c1 = clone_chromosome(tuple(p1[:cut]) + tuple(p2[cut:]))
    c2 = clone_chromosome(tuple(p2[:cut]) + tuple(p1[cut:]))
    return c1, c2


def _mutate_interval(cond: tuple[int, int], rng: np.random.Generator) -> tuple[int, int]:
    lo, hi = cond
    lo = lo + int(rng.integers(-1, 2))
    hi = hi + int(rng.integers(-1, 2))
    if lo > hi:
        lo = hi = (lo + hi) // 2
    return (lo, hi)


def _mutate_rule(rule: Rule, rng: np.random.Generator, n_symbols: Optional[int]) -> Rule:
    # One sub-gene of the rule changes: a condition (interval jitter) or the action.
    slots = len(rule.conditions) + 1
    pick = int(rng.integers(slots))
    new = rule.clone()
    if pick == len(rule.conditions):
        if n_symbols and n_symbols > 1:
            choices = [a for a in range(n_symbols) if a != rule.action]
            new.action = int(choices[rng.integers(len(choices))])
    else:
        cond = rule.conditions[pick]
        if isinstance(cond, tuple):
            conds = list(rule.conditions)
            conds[pick] = _mutate_interval(cond, rng)
            new.conditions = tuple(conds)
    return new


def mutate(chromosome, rate: float, rng: np.random.Generator,
           n_symbols: Optional[int] = None, sigma: float = 0.3):
    """Independently resample each gene with probability ``rate``: discrete
    genes become a uniformly chosen different symbol, real genes take a
    Gaussian perturbation, interval genes jitter their endpoints."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError("rate must lie in [0, 1]")
    if isinstance(chromosome, np.ndarray):
        out = chromosome.copy()
        mask = rng.random(out.shape) < rate
        out[mask] += rng.normal(0.0, sigma, int(mask.sum()))
        return out
    genes = list(chromosome)
    for i, g in enumerate(genes):
        if rng.random() >= rate:
            continue
        if isinstance(g, Rule):
            genes[i] = _mutate_rule(g, rng, n_symbols)
        elif isinstance(g, tuple) and len(g) == 2:
            genes[i] = _mutate_interval(g, rng)
        elif isinstance(g, (int, np.integer)):
            if n_symbols is None or n_symbols < 2:
                continue
            choices = [a for a in range(n_symbols) if a != g]
            genes[i] = int(choices[rng.integers(len(choices))])
        else:
            genes[i] = float(g) + float(rng.normal(0.0, sigma))
    return tuple(genes)


def evaluate_population(pop: Population, evaluator: Callable) -> None:
    for m in pop.members:
        if m.fitness is None:
            m.fitness = evaluator(m.chromosome)


def next_generation(
    pop: Population,
    cfg: EAConfig,
    evaluator: Callable,
    rng: np.random.Generator,
    fresh: Optional[Callable] = None,
) -> Population:
    """One generational cycle: elitist copy, select/cross/mutate fill, random
    immigrants into the worst non-elite slots, full evaluation."""
    evaluate_population(pop, evaluator)
    size = pop.size
    ranked = sorted(range(size), key=lambda i: (-pop.members[i].fitness, i))
    elites = [
        replace(pop.members[i], chromosome=clone_chromosome(pop.members[i].chromosome),
                age=pop.members[i].age + 1)
        for i in ranked[: cfg.elitism]
    ]
    need = size - len(elites)
    children: list[Individual] = []
    while len(children) < need:
        p1 = _select(pop, cfg, rng)
        p2 = _select(pop, cfg, rng)
        c1 = clone_chromosome(p1.chromosome)
        c2 = clone_chromosome(p2.chromosome)
        if len(c1) >= 2 and rng.random() < cfg.crossover_prob:
            c1, c2 = one_point_crossover(c1, c2, rng)
        for c in (c1, c2):
            if len(children) < need:
                mutated = mutate(c, cfg.mutation_rate, rng,
                                 n_symbols=cfg.gene_symbols, sigma=cfg.mutation_sigma)
                children.append(Individual(mutated))
    for child in children:
        child.fitness = evaluator(child.chromosome)
    n_immigrants = math.floor(cfg.immigrant_fraction * size)
    if n_immigrants and fresh is not None:
        worst_first = sorted(range(len(children)), key=lambda i: (children[i].fitness, i))
        for i in worst_first[:n_immigrants]:
            chrom = fresh(rng)
            children[i] = Individual(chrom, fitness=evaluator(chrom))
    return Population(elites + children, pop.generation + 1)


def steady_state_step(
    pop: Population,
    evaluator: Callable,
    rng: np.random.Generator,
    delta: float = 0.05,
    mutation_rate: float = 1.0,
    mutation_sigma: float = 0.3,
    n_symbols: Optional[int] = None,
    tournament_k: int = 2,
    gene_bounds: tuple[float, float] = (0.05, 0.95),
) -> Population:
    """One steady-state step: breed a single offspring, evaluate it once, and
    replace the current worst member.  The parent's crossover gene moves down
    by ``delta`` when the offspring improves on it, up otherwise, clipped to
    ``gene_bounds``."""
    evaluate_population(pop, evaluator)
    p1 = select_tournament(pop, tournament_k, rng)
    p2 = select_tournament(pop, tournament_k, rng)
    if p1.crossover_gene is None:
        raise MissingCrossoverGene("steady-state breeding needs a crossover gene")
    if rng.random() < p1.crossover_gene:
        child_chrom = one_point_crossover(p1.chromosome, p2.chromosome, rng)[0]
    else:
        child_chrom = mutate(clone_chromosome(p1.chromosome), mutation_rate, rng,
                             n_symbols=n_symbols, sigma=mutation_sigma)
    fitness = evaluator(child_chrom)
    step = -delta if fitness > p1.fitness else delta
    gene = min(gene_bounds[1], max(gene_bounds[0], p1.crossover_gene + step))
    worst = min(range(pop.size), key=lambda i: (pop.members[i].fitness, -i))
    pop.members[worst] = Individual(child_chrom, fitness=fitness, crossover_gene=gene)
    return pop


def random_population(
    size: int,
    fresh: Callable,
    rng: np.random.Generator,
    crossover_gene: Optional[float] = None,
) -> Population:
    members = [Individual(fresh(rng), crossover_gene=crossover_gene) for _ in range(size)]
    return Population(members)
