"""Named reproduction experiments over the benchmark worlds, plus the shared
multi-run machinery (per-run derived seeds, bounded thread pool)."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import reference
from .credit import FitnessConfig, evaluate_fitness, profit_sharing_update
from .envs import Environment, enumerate_policies, expected_return, make_grid_world, \
    make_hidden_state_world, run_episode
from .evolution import EAConfig, Individual, Population, clone_chromosome, \
    evaluate_population, mutate, next_generation, one_point_crossover, \
    random_population, select_tournament, steady_state_step
from .lamarck import ExperienceBuffer, NotTriggered, clustered_crossover, cover, specialize
from .policies import DEFAULT_RULE_ID, NeuralSchema, Rule, RuleSetPolicy, \
    TabularPolicy, decode, sensor_input_size
from .td import TDConfig, greedy_policy, run_q_learning, value_iteration_oracle

THREADS_ENV_VAR = "EARL_THREADS"


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV_VAR, "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def run_indexed(n_runs: int, fn: Callable[[int], object]) -> list:
    """Run ``fn(0..n_runs-1)``, in parallel when allowed; results come back in
    run order so output never depends on scheduling."""
    workers = min(thread_count(), n_runs)
    if workers <= 1 or n_runs <= 1:
        return [fn(i) for i in range(n_runs)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_runs)))


def run_rng(seed: int, run_index: int) -> np.random.Generator:
    return np.random.default_rng([seed, run_index])


def make_tabular_evaluator(env: Environment,
                           cfg: Optional[FitnessConfig] = None) -> Callable:
    return lambda chrom: evaluate_fitness(env, TabularPolicy(chrom), cfg)


def fresh_tabular(env: Environment) -> Callable:
    na, no = env.num_actions, env.num_observations
    return lambda rng: tuple(int(a) for a in rng.integers(0, na, size=no))


@dataclass
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float
    fraction_optimal: Optional[float] = None


def run_generational_ea(
    env: Environment,
    cfg: EAConfig,
    rng: np.random.Generator,
    evaluator: Optional[Callable] = None,
    fresh: Optional[Callable] = None,
    optimal_genes: Optional[tuple[int, ...]] = None,
    stop_at: Optional[float] = None,
) -> tuple[list[GenerationStats], Population]:
    """Generational EA over tabular policies; records per-generation stats and
    optionally stops early once the best fitness reaches ``stop_at``."""
    evaluator = evaluator or make_tabular_evaluator(env)
    fresh = fresh or fresh_tabular(env)
    pop = random_population(cfg.population_size, fresh, rng)
    evaluate_population(pop, evaluator)
    history = [_stats(pop, optimal_genes)]
    for _ in range(cfg.generations):
        if stop_at is not None and history[-1].best_fitness >= stop_at:
            break
        pop = next_generation(pop, cfg, evaluator, rng, fresh)
        history.append(_stats(pop, optimal_genes))
    return history, pop


def _stats(pop: Population, optimal_genes) -> GenerationStats:
    fits = [m.fitness for m in pop.members]
    fraction = None
    if optimal_genes is not None:
        fraction = sum(1 for m in pop.members if tuple(m.chromosome) == optimal_genes)
        fraction /= pop.size
    return GenerationStats(pop.generation, max(fits), float(np.mean(fits)), fraction)


def reference_ea_config(generations: int = 50) -> EAConfig:
    """The hidden-world convergence experiment's EA settings: binary
    tournament, 50 policies, 0.8 crossover, 0.01 mutation; no elites, no
    immigrants."""
    return EAConfig(
        population_size=50,
        crossover_prob=0.8,
        mutation_rate=0.01,
        selection="tournament",
        tournament_k=2,
        elitism=0,
        immigrant_fraction=0.0,
        generations=generations,
        gene_symbols=2,
    )


# ---------------------------------------------------------------------------
# Alternative representations: networks, GENITOR, rule sets
# ---------------------------------------------------------------------------

def neural_schema_for(env: Environment, hidden_size: int,
                      encoding: Optional[str] = None) -> NeuralSchema:
    """Network dimensions for an environment; the grid world defaults to the
    factored column+row one-hot encoding, other worlds to one-hot over
    observation ids."""
    if encoding is None:
        encoding = "sensors" if env.name == "grid" else "obs"
    if encoding == "sensors":
        num_inputs = sensor_input_size(env.sensor_bounds)
    else:
        num_inputs = env.num_observations
    return NeuralSchema(
        num_inputs=num_inputs,
        hidden_size=hidden_size,
        num_actions=env.num_actions,
        encoding=encoding,
        sensor_bounds=env.sensor_bounds,
    )


def fresh_neural(schema: NeuralSchema, scale: float = 1.0) -> Callable:
    return lambda rng: rng.normal(0.0, scale, schema.weight_count)


def make_neural_evaluator(env: Environment, schema: NeuralSchema,
                          cfg: Optional[FitnessConfig] = None) -> Callable:
    return lambda chrom: evaluate_fitness(env, decode(chrom, schema), cfg)


def run_neural_ea(
    env: Environment,
    cfg: EAConfig,
    rng: np.random.Generator,
    hidden_size: int = 4,
    weight_scale: float = 1.0,
) -> tuple[list[GenerationStats], Population]:
    schema = neural_schema_for(env, hidden_size)
    return run_generational_ea(
        env, cfg, rng,
        evaluator=make_neural_evaluator(env, schema),
        fresh=fresh_neural(schema, weight_scale),
    )


def run_genitor(
    env: Environment,
    rng: np.random.Generator,
    population_size: int = 50,
    generations: int = 50,
    hidden_size: int = 4,
    delta: float = 0.05,
    gene_bounds: tuple[float, float] = (0.05, 0.95),
    initial_gene: float = 0.5,
    mutation_rate: float = 0.1,
    mutation_sigma: float = 0.3,
    weight_scale: float = 1.0,
) -> tuple[list[GenerationStats], Population]:
    """Steady-state search over network policies; one pseudo-generation is
    ``population_size`` replace-worst steps."""
    schema = neural_schema_for(env, hidden_size)
    evaluator = make_neural_evaluator(env, schema)
    pop = random_population(population_size, fresh_neural(schema, weight_scale),
                            rng, crossover_gene=initial_gene)
    evaluate_population(pop, evaluator)
    history = [_stats(pop, None)]
    for gen in range(1, generations + 1):
        for _ in range(population_size):
            steady_state_step(pop, evaluator, rng, delta=delta,
                              mutation_rate=mutation_rate,
                              mutation_sigma=mutation_sigma,
                              gene_bounds=gene_bounds)
        pop.generation = gen
        history.append(_stats(pop, None))
    return history, pop


def random_rule(env: Environment, rng: np.random.Generator) -> Rule:
    """A random rule: each sensor condition is a don't-care half the time,
    otherwise a random interval inside the sensor's bounds."""
    conditions = []
    for lo, hi in env.sensor_bounds:
        if rng.random() < 0.5:
            conditions.append(None)
        else:
            a, b = sorted(int(v) for v in rng.integers(lo, hi + 1, size=2))
            conditions.append((a, b))
    return Rule(tuple(conditions), int(rng.integers(env.num_actions)))


def _covering(policy: RuleSetPolicy, obs) -> int:
    return cover(policy, obs).action


def _specialize_pass(policy: RuleSetPolicy, buffer: ExperienceBuffer,
                     env: Environment) -> None:
    """Replace low-strength rules that fired in high-payoff episodes with
    versions narrowed to the sensor reading that triggered them."""
    for record in buffer.high_payoff_episodes():
        for step in record.trace.steps:
            i = step.fired_rule_id
            if i is None or i == DEFAULT_RULE_ID or i >= len(policy.rules):
                continue
            try:
                policy.rules[i] = specialize(
                    policy.rules[i], step.observation.sensors, record.payoff,
                    env.sensor_bounds, payoff_range=env.payoff_range,
                )
            except (NotTriggered, ValueError):
                continue


def run_rules_ea(
    env: Environment,
    cfg: EAConfig,
    rng: np.random.Generator,
    num_rules: int = 8,
    lamarck: bool = False,
    beta: float = 0.2,
) -> tuple[list[GenerationStats], Population]:
    """Generational EA over rule-set policies.  Rule strengths are refreshed
    by profit sharing during every evaluation.  With ``lamarck`` enabled,
    unmatched observations are covered on the fly, over-general rules are
    specialized after high-payoff episodes, both changes are inherited, and
    recombination keeps co-firing rule clusters together."""

    def fresh(r: np.random.Generator):
        return tuple(random_rule(env, r) for _ in range(num_rules))

    buffers: dict[int, ExperienceBuffer] = {}

    def evaluate(member: Individual) -> None:
        policy = RuleSetPolicy(list(member.chromosome),
                               default_action=None if lamarck else 0)
        buffer = ExperienceBuffer()
        total = 0.0
        for start, p in env.start_states:
            trace = run_episode(env, policy, start,
                                on_no_match=_covering if lamarck else None)
            total += p * trace.total_return
            buffer.record(trace, trace.total_return)
            fired = {i for i in trace.fired_rule_ids
                     if i is not None and i != DEFAULT_RULE_ID}
            profit_sharing_update([policy.rules[i] for i in fired],
                                  trace.total_return, beta, env.payoff_range)
        if lamarck:
            _specialize_pass(policy, buffer, env)
        member.chromosome = tuple(policy.rules)
        member.fitness = total
        buffers[id(member)] = buffer

    def breed_pair(p1: Individual, p2: Individual) -> tuple[tuple, tuple]:
        if rng.random() < cfg.crossover_prob and len(p1.chromosome) >= 2 \
                and len(p2.chromosome) >= 2:
            if lamarck:
                c1, c2 = clustered_crossover(
                    RuleSetPolicy([r.clone() for r in p1.chromosome], None),
                    buffers[id(p1)],
                    RuleSetPolicy([r.clone() for r in p2.chromosome], None),
                    buffers[id(p2)],
                    rng,
                )
                return tuple(c1.rules), tuple(c2.rules)
            return one_point_crossover(clone_chromosome(p1.chromosome),
                                       clone_chromosome(p2.chromosome), rng)
        return clone_chromosome(p1.chromosome), clone_chromosome(p2.chromosome)

    pop = random_population(cfg.population_size, fresh, rng)
    for m in pop.members:
        evaluate(m)
    history = [_stats(pop, None)]
    for gen in range(1, cfg.generations + 1):
        children: list[Individual] = []
        while len(children) < pop.size:
            p1 = select_tournament(pop, cfg.tournament_k, rng)
            p2 = select_tournament(pop, cfg.tournament_k, rng)
            for chrom in breed_pair(p1, p2):
                if len(children) < pop.size:
                    mutated = mutate(chrom, cfg.mutation_rate, rng,
                                     n_symbols=env.num_actions)
                    children.append(Individual(mutated))
        buffers.clear()
        pop = Population(children, gen)
        for m in pop.members:
            evaluate(m)
        history.append(_stats(pop, None))
    return history, pop


# ---------------------------------------------------------------------------
# Reproduction experiments
# ---------------------------------------------------------------------------

def q_table_diff() -> tuple[int, int, list[str]]:
    """Oracle Q-values vs. the reference grid table; returns (matches, total,
    mismatch descriptions)."""
    env = make_grid_world()
    oracle = value_iteration_oracle(env)
    labels = {a.label: a.id for a in env.actions}
    mismatches = []
    total = 0
    for (state, letter), expected in reference.GRID_REFERENCE_Q.items():
        total += 1
        got = oracle.get(state, labels[letter])
        if got != expected:
            mismatches.append(f"Q({state},{letter}): expected {expected}, got {got}")
    return total - len(mismatches), total, mismatches


def grid_greedy_return() -> float:
    """Return collected from a1 by the greedy policy of the exact Q-table."""
    env = make_grid_world()
    oracle = value_iteration_oracle(env)
    obs_q = type(oracle)(oracle.num_actions)
    for (state, a), v in oracle.values.items():
        obs_q.set(env.observe_map[state], a, v)
    policy = greedy_policy(obs_q, env.num_observations)
    return run_episode(env, policy, "a1").total_return


def known_policy_fitnesses() -> dict[int, float]:
    env = make_grid_world()
    out = {}
    for pid, (letters, _) in reference.GRID_KNOWN_POLICIES.items():
        policy = TabularPolicy(reference.grid_policy_genes(letters))
        out[pid] = evaluate_fitness(env, policy)
    return out


def brute_force_hidden() -> list[tuple[tuple[int, ...], float]]:
    """Expected return of every deterministic hidden-world policy."""
    env = make_hidden_state_world()
    return [(p.genes, expected_return(env, p)) for p in enumerate_policies(env)]


@dataclass
class AliasingResult:
    seed: int
    q_blue_left: float
    q_blue_right: float
    greedy_genes: tuple[int, ...]


def qlearning_aliasing(seeds: Sequence[int], episodes: int = 10_000,
                       epsilon: float = 0.1) -> list[AliasingResult]:
    """Harmonic-rate Q-learning on the aliased world, one run per seed."""
    env = make_hidden_state_world()
    blue = env.observe_map["blue1"]

    def one(i: int) -> AliasingResult:
        cfg = TDConfig(learning_rate="harmonic", epsilon=epsilon,
                       episodes=episodes, seed=seeds[i])
        q = run_q_learning(env, cfg)
        return AliasingResult(
            seed=seeds[i],
            q_blue_left=q.get(blue, 0),
            q_blue_right=q.get(blue, 1),
            greedy_genes=greedy_policy(q, env.num_observations).genes,
        )

    return run_indexed(len(seeds), one)


@dataclass
class HiddenEAResult:
    fractions: list[float]       # fraction-optimal per generation
    final_best: float


def hidden_ea_run(seed: int, run_index: int, generations: int = 50) -> HiddenEAResult:
    env = make_hidden_state_world()
    cfg = reference_ea_config(generations)
    history, pop = run_generational_ea(
        env, cfg, run_rng(seed, run_index),
        optimal_genes=reference.HIDDEN_OPTIMAL_GENES,
    )
    # A fixed row count per run: early-stop is disabled above.
    return HiddenEAResult([h.fraction_optimal for h in history],
                          pop.best().fitness)


def hidden_ea_experiment(runs: int, seed: int,
                         generations: int = 50) -> tuple[np.ndarray, list[float]]:
    """Mean fraction-optimal per generation across runs, plus each run's final
    best fitness."""
    results = run_indexed(runs, lambda i: hidden_ea_run(seed, i, generations))
    fractions = np.array([r.fractions for r in results])
    return fractions.mean(axis=0), [r.final_best for r in results]


def grid_ea_run(seed: int, run_index: int, max_generations: int = 200) -> tuple[bool, int]:
    """Whether one seeded run reaches the optimal grid return, and when."""
    env = make_grid_world()
    cfg = EAConfig(population_size=100, elitism=1, generations=max_generations,
                   gene_symbols=env.num_actions)
    history, _ = run_generational_ea(
        env, cfg, run_rng(seed, run_index),
        stop_at=float(reference.GRID_OPTIMAL_RETURN),
    )
    reached = history[-1].best_fitness >= reference.GRID_OPTIMAL_RETURN
    return reached, history[-1].generation


def grid_ea_experiment(runs: int, seed: int,
                       max_generations: int = 200) -> list[tuple[bool, int]]:
    return run_indexed(runs, lambda i: grid_ea_run(seed, i, max_generations))
