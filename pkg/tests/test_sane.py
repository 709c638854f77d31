"""Cooperative co-evolution of neurons and blueprints."""

import numpy as np
import pytest

from evorl.envs import expected_return, make_hidden_state_world
from evorl.policies import NeuralPolicy
from evorl.reference import HIDDEN_OPTIMAL_RETURN
from evorl.sane import (
    Blueprint,
    DanglingRef,
    Neuron,
    SaneConfig,
    assemble_network,
    init_populations,
    network_schema,
    neuron_diversity,
    random_blueprint,
    run_sane,
    sane_generation,
)


@pytest.fixture
def env():
    return make_hidden_state_world()


def neuron_with(in_w, out_w):
    return Neuron(np.array(in_w, dtype=float), np.array(out_w, dtype=float))


class TestAssembly:
    def test_referenced_neurons_fill_the_hidden_slots(self, env):
        schema = network_schema(env, hidden_size=2)
        neurons = [
            neuron_with([1, 0, 0, 0], [2.0, 0.0]),
            neuron_with([0, 1, 0, 0], [0.0, 3.0]),
        ]
        policy = assemble_network(Blueprint([0, 1]), neurons, schema)
        assert isinstance(policy, NeuralPolicy)
        split = (schema.num_inputs + 1) * schema.hidden_size
        w1 = policy.weights[:split].reshape(schema.num_inputs + 1, 2)
        w2 = policy.weights[split:].reshape(3, schema.num_actions)
        assert w1[:, 0].tolist() == [1, 0, 0, 0]
        assert w2[0].tolist() == [2.0, 0.0]
        assert w2[2].tolist() == [0.0, 0.0]  # output biases stay zero

    def test_duplicate_reference_contributes_twice(self, env):
        schema = network_schema(env, hidden_size=2)
        neurons = [neuron_with([1, 1, 1, 1], [1.0, 0.0])]
        policy = assemble_network(Blueprint([0, 0]), neurons, schema)
        assert policy.act(env.observe("red")) == 0

    def test_dangling_reference_raises(self, env):
        schema = network_schema(env, hidden_size=1)
        with pytest.raises(DanglingRef):
            assemble_network(Blueprint([5]), [neuron_with([0] * 4, [0, 0])], schema)


class TestCreditAssignment:
    def test_blueprint_fitness_equals_its_network_fitness(self, env):
        cfg = SaneConfig(neuron_pop_size=10, blueprint_pop_size=5,
                         hidden_size=2, seed=0)
        rng = np.random.default_rng(0)
        neurons, blueprints = init_populations(env, cfg, rng)
        snapshot = [bp.clone() for bp in blueprints]
        sane_generation(neurons, blueprints, env, cfg, rng)
        schema = network_schema(env, cfg.hidden_size)
        for bp, original in zip(blueprints, snapshot):
            policy = assemble_network(original, neurons, schema)
            assert bp.fitness == expected_return(env, policy)

    def test_neuron_fitness_is_mean_of_top_participations(self, env):
        cfg = SaneConfig(neuron_pop_size=8, blueprint_pop_size=6,
                         hidden_size=2, top_participation=2, seed=1)
        rng = np.random.default_rng(1)
        neurons, blueprints = init_populations(env, cfg, rng)
        sane_generation(neurons, blueprints, env, cfg, rng)
        floor = min(bp.fitness for bp in blueprints)
        for n in neurons:
            if n.participation:
                top = sorted(n.participation, reverse=True)[:2]
                assert n.fitness == pytest.approx(float(np.mean(top)))
            else:
                assert n.fitness == floor

    def test_populations_keep_their_sizes(self, env):
        cfg = SaneConfig(neuron_pop_size=12, blueprint_pop_size=7, hidden_size=3)
        rng = np.random.default_rng(2)
        neurons, blueprints = init_populations(env, cfg, rng)
        n2, b2 = sane_generation(neurons, blueprints, env, cfg, rng)
        assert len(n2) == 12
        assert len(b2) == 7
        assert all(0 <= ref < 12 for bp in b2 for ref in bp.neuron_refs)


class TestDiversity:
    def test_identical_neurons_have_zero_diversity(self):
        twins = [neuron_with([1, 2], [3]) for _ in range(4)]
        assert neuron_diversity(twins) == 0.0

    def test_distinct_neurons_have_positive_diversity(self):
        pair = [neuron_with([0, 0], [0]), neuron_with([3, 4], [0])]
        assert neuron_diversity(pair) == pytest.approx(5.0)


class TestFullRun:
    def test_majority_of_seeds_reach_the_optimal_return(self, env):
        hits = 0
        for seed in range(5):
            _, best = run_sane(env, SaneConfig(generations=60, seed=seed))
            hits += best >= HIDDEN_OPTIMAL_RETURN
        assert hits >= 3

    def test_random_blueprint_refs_in_range(self):
        rng = np.random.default_rng(0)
        bp = random_blueprint(4, 9, rng)
        assert len(bp.neuron_refs) == 4
        assert all(0 <= r < 9 for r in bp.neuron_refs)

    def test_invalid_configs_rejected(self):
        with pytest.raises(ValueError):
            SaneConfig(neuron_pop_size=2, hidden_size=5)
        with pytest.raises(ValueError):
            SaneConfig(elite_fraction=0.0)
