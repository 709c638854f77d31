#!/usr/bin/env python3
"""Hidden-world EA convergence: mean fraction of the population equal to the
optimal policy, per generation, averaged over many seeded runs."""

import argparse

from evorl import experiments, reference


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--runs", type=int, default=100)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--generations", type=int, default=50)
    parser.add_argument("--output", default="figure14.csv")
    args = parser.parse_args()

    fractions, finals = experiments.hidden_ea_experiment(
        args.runs, args.seed, args.generations)
    with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("generation,mean_fraction_optimal\n")
        for gen, frac in enumerate(fractions):
            fh.write(f"{gen},{float(frac)!r}\n")
    optimal = sum(1 for f in finals if f == reference.HIDDEN_OPTIMAL_RETURN)
    print(f"wrote {args.output}")
    print(f"final mean fraction optimal: {float(fractions[-1]):.4f}")
    print(f"runs ending at the optimal return: {optimal}/{args.runs}")


if __name__ == "__main__":
    main()
