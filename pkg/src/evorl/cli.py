"""Command-line harness: environment dumps, named reproduction experiments,
and config-driven runs with deterministic CSV output.

Exit codes: 0 success, 1 an embedded assertion failed, 2 usage/config error.
CSV format is pinned for bit-exact goldens: comma separators, ``.`` decimal
point, LF line endings, a header row, and ``#``-prefixed metadata lines (the
first of which records the fully resolved config and seed).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from typing import Optional

import numpy as np

from . import experiments as ex
from . import reference
from .envs import Environment, make_grid_world, make_hidden_state_world
from .evolution import EAConfig
from .sane import SaneConfig, run_sane
from .td import TDConfig, greedy_policy, run_q_learning, value_iteration_oracle


class ConfigError(Exception):
    """Unparseable, unknown, or invalid configuration input."""


ENV_MAKERS = {"grid": make_grid_world, "hidden": make_hidden_state_world}

METHODS = ("earl_tabular", "earl_rules", "earl_neural", "genitor", "sane",
           "qlearn", "oracle")

GENITOR_GENE_BOUNDS = (0.05, 0.95)

# key -> (type, default); None default means "required".
CONFIG_SPEC = {
    "experiment": (str, ""),
    "env": (str, None),
    "method": (str, None),
    "runs": (int, 1),
    "seed": (int, 0),
    "output": (str, ""),
    "operators": (str, ""),
    # generational EA
    "generations": (int, 50),
    "population_size": (int, 50),
    "crossover_prob": (float, 0.8),
    "mutation_rate": (float, None),  # per-method default, see resolve_config
    "selection": (str, "tournament"),
    "tournament_k": (int, 2),
    "elitism": (int, 0),
    "immigrant_fraction": (float, 0.0),
    "mutation_sigma": (float, 0.3),
    # networks / GENITOR
    "hidden_size": (int, 4),
    "weight_scale": (float, 1.0),
    "delta": (float, 0.05),
    "crossover_gene_min": (float, None),
    "crossover_gene_max": (float, None),
    "crossover_gene_init": (float, 0.5),
    # rule sets
    "num_rules": (int, 8),
    "beta": (float, 0.2),
    # temporal difference
    "episodes": (int, 10_000),
    "epsilon": (float, 0.1),
    "learning_rate": (str, "harmonic"),
    "max_steps": (int, 1000),
    # cooperative co-evolution
    "neuron_pop_size": (int, 50),
    "blueprint_pop_size": (int, 20),
    "elite_fraction": (float, 0.25),
    "top_participation": (int, 5),
}

REQUIRED_KEYS = ("env", "method")


def parse_config_text(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; blank lines and ``#`` comments ignored."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        raw[key.strip()] = value.strip()
    return raw


def resolve_config(raw: dict[str, str], overrides: dict) -> dict:
    """Type-check raw strings against the config schema, apply CLI overrides,
    and fill per-method defaults.  Raises ConfigError naming the bad key."""
    cfg: dict = {}
    for key, value in raw.items():
        if key not in CONFIG_SPEC:
            raise ConfigError(f"unknown config key {key!r}")
        kind, _ = CONFIG_SPEC[key]
        try:
            cfg[key] = kind(value)
        except ValueError:
            raise ConfigError(f"invalid value for {key!r}: {value!r}") from None
    for key, value in overrides.items():
        if value is not None:
            cfg[key] = value
    for key in REQUIRED_KEYS:
        if key not in cfg:
            raise ConfigError(f"missing required config key {key!r}")
    if cfg["env"] not in ENV_MAKERS:
        raise ConfigError(f"invalid value for 'env': {cfg['env']!r}")
    if cfg["method"] not in METHODS:
        raise ConfigError(f"invalid value for 'method': {cfg['method']!r}")
    if cfg.get("operators", "") not in ("", "lamarck"):
        raise ConfigError(f"invalid value for 'operators': {cfg['operators']!r}")
    for key, (kind, default) in CONFIG_SPEC.items():
        cfg.setdefault(key, default)
    # Mutation is the GENITOR fallback operator, so its default is higher there.
    if cfg["mutation_rate"] is None:
        cfg["mutation_rate"] = 0.1 if cfg["method"] == "genitor" else 0.01
    if cfg["runs"] < 1:
        raise ConfigError("invalid value for 'runs': must be >= 1")
    if cfg["learning_rate"] != "harmonic":
        try:
            cfg["learning_rate"] = float(cfg["learning_rate"])
        except ValueError:
            raise ConfigError(
                f"invalid value for 'learning_rate': {cfg['learning_rate']!r}"
            ) from None
    return cfg


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(meta: dict, notes: list[str], header: list[str],
               rows: list[list]) -> str:
    lines = ["# " + " ".join(f"{k}={fmt(v)}" for k, v in meta.items())]
    lines += ["# " + note for note in notes]
    lines.append(",".join(header))
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_output(text: str, path: str) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def dump_environment(env: Environment) -> str:
    """Flat key-value serialization of a world: alphabets, start distribution,
    sensors, rewards, and the full transition table."""
    lines = [
        f"name = {env.name}",
        "states = " + " ".join(env.states),
        "actions = " + " ".join(a.label for a in env.actions),
        "observations = " + " ".join(o.label for o in env.observations),
    ]
    lines += [f"start {s} = {fmt(p)}" for s, p in env.start_states]
    lines += [f"sensor {i} = {lo} {hi}"
              for i, (lo, hi) in enumerate(env.sensor_bounds)]
    lines += [f"observe {s} = {env.observations[env.observe_map[s]].label}"
              for s in env.states]
    lines += [f"reward {s} = {fmt(env.state_rewards[s])}" for s in env.states]
    for s in env.states:
        for a in env.actions:
            nxt = env.transitions[(s, a.id)]
            lines.append(f"transition {s} {a.label} = {nxt or 'terminal'}")
    for s in env.states:
        for a in env.actions:
            if (s, a.id) in env.exit_rewards:
                lines.append(f"exit {s} {a.label} = {fmt(env.exit_rewards[(s, a.id)])}")
    return "\n".join(lines) + "\n"


def genes_to_letters(env: Environment, genes) -> str:
    return "".join(env.actions[g].label for g in genes)


# ---------------------------------------------------------------------------
# run methods
# ---------------------------------------------------------------------------

def _ea_config(cfg: dict) -> EAConfig:
    return EAConfig(
        population_size=cfg["population_size"],
        crossover_prob=cfg["crossover_prob"],
        mutation_rate=cfg["mutation_rate"],
        selection=cfg["selection"],
        tournament_k=cfg["tournament_k"],
        elitism=cfg["elitism"],
        immigrant_fraction=cfg["immigrant_fraction"],
        generations=cfg["generations"],
        seed=cfg["seed"],
        mutation_sigma=cfg["mutation_sigma"],
    )


def _history_table(histories: list, runs: int, extra: Optional[list] = None
                   ) -> tuple[list[str], list[list]]:
    """Stack per-run generation histories into one table; a leading run
    column appears only for multi-run output."""
    header = ["generation", "best_fitness", "mean_fitness", "fraction_optimal"]
    header += extra or []
    if runs > 1:
        header = ["run"] + header
    rows = []
    for run, history in enumerate(histories):
        for item in history:
            row = [item.generation, item.best_fitness, item.mean_fitness,
                   item.fraction_optimal]
            if extra:
                row += [getattr(item, name) for name in extra]
            rows.append([run] + row if runs > 1 else row)
    return header, rows


def _ea_summary(histories: list) -> dict:
    finals = [h[-1] for h in histories]
    return {
        "best": max(f.best_fitness for f in finals),
        "mean": float(np.mean([f.mean_fitness for f in finals])),
        "generations": max(f.generation for f in finals),
    }


def _run_generational(env, cfg, method: str):
    ea = _ea_config(cfg)
    optimal = reference.HIDDEN_OPTIMAL_GENES if (
        env.name == "hidden" and method == "earl_tabular") else None
    lamarck = cfg["operators"] == "lamarck"

    def one(i: int):
        rng = ex.run_rng(cfg["seed"], i)
        if method == "earl_tabular":
            gene_ea = dataclasses.replace(ea, gene_symbols=env.num_actions)
            history, _ = ex.run_generational_ea(env, gene_ea, rng,
                                                optimal_genes=optimal)
        elif method == "earl_neural":
            history, _ = ex.run_neural_ea(env, ea, rng,
                                          hidden_size=cfg["hidden_size"],
                                          weight_scale=cfg["weight_scale"])
        else:  # earl_rules
            history, _ = ex.run_rules_ea(env, ea, rng,
                                         num_rules=cfg["num_rules"],
                                         lamarck=lamarck, beta=cfg["beta"])
        return history

    histories = ex.run_indexed(cfg["runs"], one)
    header, rows = _history_table(histories, cfg["runs"])
    return header, rows, [], _ea_summary(histories)


def _run_genitor(env, cfg):
    lo = cfg["crossover_gene_min"]
    hi = cfg["crossover_gene_max"]
    notes = []
    if lo is None or hi is None:
        lo = GENITOR_GENE_BOUNDS[0] if lo is None else lo
        hi = GENITOR_GENE_BOUNDS[1] if hi is None else hi
        notes.append(f"crossover-gene bounds defaulted to [{fmt(lo)}, {fmt(hi)}]")

    def one(i: int):
        history, _ = ex.run_genitor(
            env, ex.run_rng(cfg["seed"], i),
            population_size=cfg["population_size"],
            generations=cfg["generations"],
            hidden_size=cfg["hidden_size"],
            delta=cfg["delta"],
            gene_bounds=(lo, hi),
            initial_gene=cfg["crossover_gene_init"],
            mutation_rate=cfg["mutation_rate"],
            mutation_sigma=cfg["mutation_sigma"],
            weight_scale=cfg["weight_scale"],
        )
        return history

    histories = ex.run_indexed(cfg["runs"], one)
    header, rows = _history_table(histories, cfg["runs"])
    return header, rows, notes, _ea_summary(histories)


def _run_sane(env, cfg):
    def one(i: int):
        sane_cfg = SaneConfig(
            neuron_pop_size=cfg["neuron_pop_size"],
            blueprint_pop_size=cfg["blueprint_pop_size"],
            hidden_size=cfg["hidden_size"],
            elite_fraction=cfg["elite_fraction"],
            top_participation=cfg["top_participation"],
            generations=cfg["generations"],
            seed=[cfg["seed"], i],
            mutation_sigma=cfg["mutation_sigma"],
            weight_scale=cfg["weight_scale"],
        )
        return run_sane(env, sane_cfg)

    results = ex.run_indexed(cfg["runs"], one)
    header = ["generation", "best_fitness", "mean_fitness", "neuron_diversity"]
    if cfg["runs"] > 1:
        header = ["run"] + header
    rows = []
    for run, (history, _) in enumerate(results):
        for item in history:
            row = [item["generation"], item["best_fitness"],
                   item["mean_fitness"], item["neuron_diversity"]]
            rows.append([run] + row if cfg["runs"] > 1 else row)
    finals = [history[-1] for history, _ in results]
    summary = {
        "best": max(best for _, best in results),
        "mean": float(np.mean([f["mean_fitness"] for f in finals])),
        "generations": max(f["generation"] for f in finals),
    }
    return header, rows, [], summary


def _run_qlearn(env, cfg):
    def one(i: int):
        returns: list[float] = []
        td_cfg = TDConfig(learning_rate=cfg["learning_rate"],
                          epsilon=cfg["epsilon"], episodes=cfg["episodes"],
                          seed=[cfg["seed"], i], max_steps=cfg["max_steps"])
        run_q_learning(env, td_cfg, episode_returns=returns)
        return returns

    results = ex.run_indexed(cfg["runs"], one)
    header = ["episode", "return"]
    if cfg["runs"] > 1:
        header = ["run"] + header
    rows = []
    for run, returns in enumerate(results):
        for episode, value in enumerate(returns):
            row = [episode, value]
            rows.append([run] + row if cfg["runs"] > 1 else row)
    flat = [v for returns in results for v in returns]
    summary = {"best": max(flat), "mean": float(np.mean(flat)),
               "generations": cfg["episodes"]}
    return header, rows, [], summary


def _run_oracle(env, cfg):
    q = value_iteration_oracle(env)
    header = ["action"] + list(env.states)
    rows = [[a.label] + [q.get(s, a.id) for s in env.states]
            for a in env.actions]
    values = [q.get(s, a.id) for s in env.states for a in env.actions]
    summary = {"best": max(values), "mean": float(np.mean(values)),
               "generations": 0}
    return header, rows, [], summary


def cmd_run(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            raw = parse_config_text(fh.read())
        cfg = resolve_config(raw, {
            "seed": args.seed, "runs": args.runs,
            "output": args.output, "operators": args.operators,
        })
        env = ENV_MAKERS[cfg["env"]]()
        runner = {
            "earl_tabular": lambda: _run_generational(env, cfg, "earl_tabular"),
            "earl_rules": lambda: _run_generational(env, cfg, "earl_rules"),
            "earl_neural": lambda: _run_generational(env, cfg, "earl_neural"),
            "genitor": lambda: _run_genitor(env, cfg),
            "sane": lambda: _run_sane(env, cfg),
            "qlearn": lambda: _run_qlearn(env, cfg),
            "oracle": lambda: _run_oracle(env, cfg),
        }[cfg["method"]]
        header, rows, notes, summary = runner()
    except (OSError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    meta = {k: cfg[k] for k in sorted(cfg)}
    write_output(render_csv(meta, notes, header, rows), cfg["output"])
    print(f"best={fmt(float(summary['best']))} mean={fmt(float(summary['mean']))} "
          f"generations={summary['generations']} seed={cfg['seed']}")
    return 0


# ---------------------------------------------------------------------------
# reproduce
# ---------------------------------------------------------------------------

def _reproduce_q_table(args, say) -> tuple[bool, list[str]]:
    matches, total, mismatches = ex.q_table_diff()
    say(f"state-action values matching the reference table: {matches}/{total}")
    return matches == total, mismatches


def _reproduce_grid_optimal(args, say) -> tuple[bool, list[str]]:
    greedy = ex.grid_greedy_return()
    reached, generation = ex.grid_ea_run(args.seed, 0)
    say(f"greedy return from a1: {greedy}")
    say(f"evolved best reached 17: {reached} (generation {generation})")
    failures = []
    if greedy != reference.GRID_OPTIMAL_RETURN:
        failures.append(f"greedy return {greedy} != {reference.GRID_OPTIMAL_RETURN}")
    if not reached:
        failures.append("evolution did not reach the optimal return")
    return not failures, failures


def _reproduce_table2(args, say) -> tuple[bool, list[str]]:
    fitnesses = ex.known_policy_fitnesses()
    failures = []
    for pid, (letters, expected) in sorted(reference.GRID_KNOWN_POLICIES.items()):
        got = fitnesses[pid]
        say(f"policy {pid} ({letters}): fitness {got}")
        if got != expected:
            failures.append(f"policy {pid}: expected {expected}, got {got}")
    return not failures, failures


def _reproduce_table5(args, say) -> tuple[bool, list[str]]:
    env = make_hidden_state_world()
    table = ex.brute_force_hidden()
    for genes, value in table:
        say(f"policy {genes_to_letters(env, genes)}: expected return {value}")
    q = run_q_learning(env, TDConfig(seed=args.seed))
    greedy = greedy_policy(q, env.num_observations).genes
    say(f"converged value-function policy: {genes_to_letters(env, greedy)}")
    by_genes = dict(table)
    best = max(v for _, v in table)
    failures = []
    if by_genes[reference.HIDDEN_OPTIMAL_GENES] != reference.HIDDEN_OPTIMAL_RETURN:
        failures.append("optimal policy return is not 1.875")
    if best != reference.HIDDEN_OPTIMAL_RETURN or \
            sum(1 for _, v in table if v == best) != 1:
        failures.append("maximum is not unique at the optimal policy")
    if by_genes[reference.HIDDEN_VALUE_FUNCTION_GENES] != \
            reference.HIDDEN_VALUE_FUNCTION_RETURN:
        failures.append("value-function policy return is not 1.0")
    if greedy != reference.HIDDEN_VALUE_FUNCTION_GENES:
        failures.append(f"greedy policy {greedy} differs from the value-function policy")
    return not failures, failures


def _reproduce_figure14(args, say) -> tuple[bool, list[str]]:
    runs = args.runs if args.runs is not None else 100
    fractions, finals = ex.hidden_ea_experiment(runs, args.seed)
    meta = {"experiment": "figure14", "runs": runs, "seed": args.seed}
    rows = [[gen, float(frac)] for gen, frac in enumerate(fractions)]
    text = render_csv(meta, [], ["generation", "mean_fraction_optimal"], rows)
    write_output(text, args.output or "")
    optimal_runs = sum(1 for f in finals if f == reference.HIDDEN_OPTIMAL_RETURN)
    say(f"final mean fraction optimal: {float(fractions[-1])}")
    say(f"runs ending at the optimal return: {optimal_runs}/{runs}")
    failures = []
    if fractions[-1] < 0.6:
        failures.append(f"final mean fraction {float(fractions[-1])} < 0.6")
    if optimal_runs < 0.95 * runs:
        failures.append(f"only {optimal_runs}/{runs} runs reached the optimal return")
    return not failures, failures


REPRODUCTIONS = {
    "q-table": _reproduce_q_table,
    "grid-optimal": _reproduce_grid_optimal,
    "table2-fitness": _reproduce_table2,
    "table5": _reproduce_table5,
    "figure14": _reproduce_figure14,
}


def cmd_reproduce(args) -> int:
    def say(line: str) -> None:
        if not args.quiet:
            print(line)

    ok, failures = REPRODUCTIONS[args.name](args, say)
    for failure in failures:
        print(f"FAIL: {failure}", file=sys.stderr)
    say(f"{args.name}: {'ok' if ok else 'failed'}")
    return 0 if ok else 1


def cmd_env_dump(args) -> int:
    env = ENV_MAKERS[args.world]()
    write_output(dump_environment(env), args.output or "")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evorl",
        description="Evolutionary and temporal-difference policy search "
                    "on two small benchmark worlds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_env = sub.add_parser("env", help="environment utilities")
    env_sub = p_env.add_subparsers(dest="env_command", required=True)
    p_dump = env_sub.add_parser("dump", help="print a world as flat key-value text")
    p_dump.add_argument("world", choices=sorted(ENV_MAKERS))
    p_dump.add_argument("--output", help="write to a file instead of stdout")
    p_dump.set_defaults(func=cmd_env_dump)

    p_rep = sub.add_parser("reproduce", help="run a named reference experiment")
    p_rep.add_argument("name", choices=sorted(REPRODUCTIONS))
    p_rep.add_argument("--runs", type=int, default=None)
    p_rep.add_argument("--seed", type=int, default=0)
    p_rep.add_argument("--output", help="CSV destination for experiments that emit one")
    p_rep.add_argument("--quiet", action="store_true")
    p_rep.set_defaults(func=cmd_reproduce)

    p_run = sub.add_parser("run", help="run a config-driven experiment")
    p_run.add_argument("--config", required=True, help="flat key = value config file")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--runs", type=int, default=None)
    p_run.add_argument("--output", default=None)
    p_run.add_argument("--operators", choices=["lamarck"], default=None)
    p_run.add_argument("--quiet", action="store_true")
    p_run.set_defaults(func=cmd_run)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
