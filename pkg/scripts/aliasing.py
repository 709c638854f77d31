#!/usr/bin/env python3
"""Perceptual aliasing demo: tabular Q-learning on the hidden-state world
averages the two aliased blue states, so its greedy policy picks the wrong
blue action while policy-space search does not."""

import argparse

import numpy as np

from evorl import experiments, reference
from evorl.envs import make_hidden_state_world


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=10, help="number of runs")
    parser.add_argument("--episodes", type=int, default=10_000)
    parser.add_argument("--epsilon", type=float, default=0.1)
    args = parser.parse_args()

    env = make_hidden_state_world()
    results = experiments.qlearning_aliasing(
        range(args.seeds), episodes=args.episodes, epsilon=args.epsilon)
    for r in results:
        letters = "".join(env.actions[g].label for g in r.greedy_genes)
        print(f"seed {r.seed}: Q(blue,L)={r.q_blue_left:+.4f} "
              f"Q(blue,R)={r.q_blue_right:+.4f} greedy={letters}")
    mean_l = float(np.mean([r.q_blue_left for r in results]))
    mean_r = float(np.mean([r.q_blue_right for r in results]))
    print(f"mean Q(blue,L)={mean_l:+.4f} (aliased average of +3 and -4)")
    print(f"mean Q(blue,R)={mean_r:+.4f}")
    print(f"value-function greedy policy earns "
          f"{reference.HIDDEN_VALUE_FUNCTION_RETURN}; "
          f"the optimal policy earns {reference.HIDDEN_OPTIMAL_RETURN}")


if __name__ == "__main__":
    main()
