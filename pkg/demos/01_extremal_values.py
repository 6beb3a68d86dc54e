"""Largest chain-free families, P-free counts and the 2-chain floor at desk scale.

    python demos/01_extremal_values.py
"""
import math

from treesat.experiments import enumerate_p_free, la_star_exact
from treesat.lattice import Family
from treesat.posets import chain, v_poset
from treesat.experiments import centralized_family, two_chain_count, two_chain_minima


def main():
    print("Largest k-chain-free subfamily of B_n (exact branch and bound):")
    print("  n  k=2  k=3  k=4")
    for n in range(1, 7):
        row = [la_star_exact(Family.full(n), chain(k)).value for k in (2, 3, 4)]
        print(f"  {n}  {row[0]:3d}  {row[1]:3d}  {row[2]:3d}")

    res = la_star_exact(Family.full(4), v_poset())
    print(f"\nLargest induced-V-free subfamily of B_4 has {res.value} sets; one example:")
    print("  " + " ".join(sorted(f"{{{','.join(str(e + 1) for e in range(4) if m >> e & 1)}}}"
                                 for m in res.witness)))

    print("\nNumber of 2-chain-free families (antichains) of B_n and the normalized exponent:")
    for n in (2, 3, 4):
        count = enumerate_p_free(n, chain(2))
        central = math.gamma(n + 1) / math.gamma(n / 2 + 1) ** 2
        print(f"  n={n}: {count:4d}   log2(count)/binom(n, n/2) = {math.log2(count) / central:.3f}")

    print("\nFewest comparable pairs among a sets of B_4, against the centralized family:")
    minima = two_chain_minima(4)
    for a in range(0, 17, 2):
        print(f"  a={a:2d}  minimum {minima[a]:3d}  centralized {two_chain_count(centralized_family(4, a)):3d}")


if __name__ == "__main__":
    main()
