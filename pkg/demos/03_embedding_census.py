"""Greedy embeddings of tree posets into the middle levels, and how a forbidden pair prunes them.

    python demos/03_embedding_census.py
"""
from treesat.cleaning import clean_pipeline
from treesat.embedding import BoundedForbidden, embedding_census
from treesat.supersat import count_induced_copies, mstar
from treesat.lattice import format_set, middle_levels
from treesat.posets import chain, height, spider, v_poset, zigzag


def main():
    n = 5
    print(f"Embeddings into the q middle levels of B_{n} (q = height of the poset):")
    print("  poset      M*   embeddings  distinct images")
    for P in (chain(2), chain(3), v_poset(), zigzag(4), spider(3)):
        q = height(P)
        fam = middle_levels(n, q).family(n)
        views = clean_pipeline(fam, q, 0, P.size).views
        census = embedding_census(fam, P, views)
        print(f"  {P.name:9s} {mstar(n, q, P):4d}  {census.total:10d}  {len(census.images):15d}")

    P = v_poset()
    fam = middle_levels(4, 2).family(4)
    views = clean_pipeline(fam, 2, 0, P.size).views
    base = embedding_census(fam, P, views)
    pair = sorted(next(iter(base.images)))[:2]
    blocked = embedding_census(fam, P, views, BoundedForbidden.upward_closure([pair]))
    print(f"\nV in the two middle levels of B_4: {count_induced_copies(fam, P)[0]} copies, "
          f"{base.total} embeddings found.")
    print(f"Forbidding every image that contains the pair {format_set(pair[0])}, {format_set(pair[1])}: {blocked.total} embeddings remain.")


if __name__ == "__main__":
    main()
