"""Witnesses, bad markers and the cleaning process on a four-set example.

    python demos/02_cleaning_walkthrough.py
"""
from fractions import Fraction

from treesat.chains import build_strong_T, power_view
from treesat.cleaning import audit_trace, clean, find_witness
from treesat.lattice import Family
from treesat.chains import perm_unrank
from treesat.lattice import format_set, subset_mask


def show_chains(T):
    for rank, markers in sorted(T.markers.items()):
        perm = "".join(str(e + 1) for e in perm_unrank(rank, T.n))
        print(f"    chain {perm}: " + " > ".join(format_set(m) for m in markers))


def main():
    top = subset_mask([1, 2, 3, 4])
    fam = Family.of(4, [top, subset_mask([1, 2]), subset_mask([1])])
    q = 2
    T0 = build_strong_T(fam, q)
    print(f"Family: {', '.join(format_set(m) for m in fam)}")
    print(f"Chains carrying at least {q} members ({T0.size} markers in total):")
    show_chains(T0)

    M = power_view(T0, q)
    for delta in (Fraction(1, 4), Fraction(1, 3)):
        w = find_witness(top, 1, delta, M)
        verdict = "none" if w is None else f"{{{', '.join(format_set(m) for m in w.members)}}} hit chance {w.measure}"
        print(f"\nCheapest lower witness for {format_set(top)} in position 1 at delta={delta}: {verdict}")

    for Delta in (3, 4):
        trace = clean(T0, q, Fraction(1, 3), Delta, 1)
        log = trace.logs[0]
        print(f"\nOne cleaning round at delta=1/3, Delta={Delta}:")
        print(f"  bad (set, position, side): {[(format_set(m), i, s) for m, i, s in sorted(log.bad)]}")
        print(f"  chains dropped whole: {len(log.removed_chains)}, single markers dropped: {len(log.removed_members)}")
        print("  surviving chains:")
        show_chains(trace.final)
        print(f"  audit problems: {audit_trace(trace) or 'none'}")


if __name__ == "__main__":
    main()
