"""Largest 2-chain-free subfamily of a random half of B_6, over 200 seeded trials.

    python demos/05_random_turan.py
"""
from collections import Counter
from fractions import Fraction

from treesat.experiments import random_turan_trials
from treesat.posets import chain


def main():
    stats = random_turan_trials(6, Fraction(1, 2), chain(2), 200, seed=42)
    s = stats.summary()
    print(f"trials {s['trials']} (all exact: {s['greedy_trials'] == 0}), PRNG {s['prng']}")
    print(f"mean La* {s['mean_la_star']:.3f}, max {s['max_la_star']}, reference (k-1) p binom(6,3) = {s['reference']}")
    print(f"mean / reference = {s['mean_la_star'] / s['reference_float']:.4f}")
    hist = Counter(r.la_star for r in stats.records)
    for value in sorted(hist):
        print(f"  {value:2d} {'#' * hist[value]}")


if __name__ == "__main__":
    main()
