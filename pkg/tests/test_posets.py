import math

import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_rank_functions, is_induced
from treesat.lattice import Family, subset_mask
from treesat.posets import (
    BUILTIN,
    Poset,
    PosetError,
    antichain,
    are_isomorphic,
    chain,
    count_automorphisms,
    diamond,
    format_poset,
    hasse,
    height,
    induced_poset_of,
    is_induced_copy,
    is_tree_poset,
    lambda_poset,
    load_poset,
    parse_poset,
    rank_functions,
    spider,
    suite,
    tree_order,
    v_poset,
    zigzag,
)


def S(*elems):
    return subset_mask(elems)


@st.composite
def random_posets(draw, max_size=8):
    """Random strict orders: relations compatible with a hidden linear order."""
    size = draw(st.integers(1, max_size))
    pairs = [(i, j) for i in range(size) for j in range(i + 1, size)]
    chosen = draw(st.sets(st.sampled_from(pairs), max_size=len(pairs))) if pairs else set()
    rel = set(chosen)
    changed = True
    while changed:
        changed = False
        for a, b in list(rel):
            for c, d in list(rel):
                if b == c and (a, d) not in rel:
                    rel.add((a, d))
                    changed = True
    return Poset(size, rel)


@st.composite
def random_trees(draw, max_size=7):
    size = draw(st.integers(1, max_size))
    covers = []
    for v in range(1, size):
        u = draw(st.integers(0, v - 1))
        covers.append((u, v) if draw(st.booleans()) else (v, u))
    return Poset.from_covers(size, covers)


# --- construction --------------------------------------------------------------------

def test_poset_rejects_cycles_and_reflexive_pairs():
    with pytest.raises(PosetError):
        Poset(2, [(0, 1), (1, 0)])
    with pytest.raises(PosetError):
        Poset(1, [(0, 0)])


def test_poset_rejects_non_transitive_relation():
    with pytest.raises(PosetError):
        Poset(3, [(0, 1), (1, 2)])


def test_hasse_examples():
    assert sorted(hasse(chain(3)).covers) == [(0, 1), (1, 2)]
    assert len(hasse(antichain(3)).covers) == 0
    assert len(hasse(diamond()).covers) == 4


@settings(max_examples=60, deadline=None)
@given(random_posets())
def test_transitive_closure_of_hasse_recovers_the_order(p):
    rebuilt = Poset.from_covers(p.size, hasse(p).covers)
    assert sorted(rebuilt.relations()) == sorted(p.relations())


# --- trees and height ----------------------------------------------------------------

def test_tree_recognition_examples():
    assert is_tree_poset(chain(4)) and height(chain(4)) == 4
    assert not is_tree_poset(diamond())
    assert is_tree_poset(v_poset()) and height(v_poset()) == 2
    assert not is_tree_poset(antichain(2))


def test_empty_poset_rejected():
    with pytest.raises(PosetError):
        is_tree_poset(Poset(0, []))


@settings(max_examples=60, deadline=None)
@given(random_trees())
def test_tree_has_one_fewer_edge_than_elements(p):
    assert is_tree_poset(p)
    assert len(hasse(p).covers) == p.size - 1


def test_tree_order_examples():
    t = tree_order(chain(2), 0)
    assert t.order == (0, 1) and t.parent[1] == 0
    t = tree_order(v_poset(), 0)
    assert t.order == (0, 1, 2) and t.parent[1] == 0 and t.parent[2] == 0
    t = tree_order(lambda_poset(), 0)
    assert t.order[0] == 0 and set(t.parent.values()) == {0}
    path = Poset.from_covers(3, [(0, 1), (2, 1)])  # a < b > c
    t = tree_order(path, 1)
    assert t.order == (1, 0, 2)


@settings(max_examples=60, deadline=None)
@given(random_trees(), st.data())
def test_tree_order_has_exactly_one_earlier_neighbour(p, data):
    root = data.draw(st.integers(0, p.size - 1))
    t = tree_order(p, root)
    nbrs = hasse(p).undirected_neighbors()
    assert sorted(t.order) == list(range(p.size)) and t.order[0] == root
    for j, v in enumerate(t.order[1:], 1):
        earlier = [u for u in nbrs[v] if u in t.order[:j]]
        assert earlier == [t.parent[v]]


def test_tree_order_rejects_non_tree():
    with pytest.raises(PosetError):
        tree_order(diamond(), 0)


# --- rank functions ------------------------------------------------------------------

def test_rank_function_examples():
    assert len(rank_functions(chain(2), 3)) == 3
    rs = rank_functions(v_poset(), 2)
    assert [r.ranks for r in rs] == [(2, 1, 1)]
    assert len(rank_functions(chain(3), 3)) == 1
    assert rank_functions(chain(3), 2) == []


@pytest.mark.parametrize("k", [1, 2, 3, 4])
@pytest.mark.parametrize("q", [1, 2, 3, 4, 5, 6])
def test_chain_rank_function_count_is_binomial(k, q):
    got = [r.ranks for r in rank_functions(chain(k), q)]
    assert got == sorted(brute_rank_functions(chain(k), q))
    assert len(got) == math.comb(q, k)


@settings(max_examples=40, deadline=None)
@given(random_trees(6), st.integers(1, 5))
def test_rank_functions_match_brute_force(p, q):
    got = [r.ranks for r in rank_functions(p, q)]
    assert got == brute_rank_functions(p, q)
    assert all(r.is_valid_for(p) for r in rank_functions(p, q))


# --- induced copies ------------------------------------------------------------------

def test_induced_copy_examples():
    assert is_induced_copy([S(1), S(1, 2)], chain(2))
    assert not is_induced_copy([S(1), S(2)], chain(2))
    assert not is_induced_copy([S(1, 2), S(1), S(2)], v_poset())
    assert is_induced_copy([0, S(1), S(2)], v_poset())


def test_induced_copy_rejects_duplicates():
    with pytest.raises(ValueError):
        is_induced_copy([S(1), S(1)], chain(2))


def test_induced_poset_examples():
    assert are_isomorphic(induced_poset_of(Family.level(3, 1)), antichain(3))
    assert are_isomorphic(induced_poset_of([0, S(1), S(1, 2)]), chain(3))
    assert are_isomorphic(induced_poset_of(Family.full(2)), diamond())


@settings(max_examples=80, deadline=None)
@given(random_trees(4), st.data())
def test_induced_copy_agrees_with_brute_relation_check(p, data):
    n = 4
    masks = data.draw(st.lists(st.integers(0, (1 << n) - 1), min_size=p.size, max_size=p.size, unique=True))
    assert is_induced_copy(masks, p) == is_induced(masks, p)
    if is_induced_copy(masks, p):
        assert are_isomorphic(induced_poset_of(masks), p)


def test_automorphism_counts():
    assert count_automorphisms(v_poset()) == 2
    assert count_automorphisms(spider(3)) == 6
    assert count_automorphisms(chain(3)) == 1
    assert count_automorphisms(antichain(3)) == 6


# --- builtins and file format ----------------------------------------------------------

def test_suite_members_are_trees():
    for p in suite():
        assert is_tree_poset(p), p


def test_zigzag_shapes():
    assert are_isomorphic(zigzag(3), lambda_poset())
    assert height(zigzag(4)) == 2 and len(hasse(zigzag(4)).covers) == 3


@pytest.mark.parametrize("name", sorted(BUILTIN))
def test_poset_text_round_trip(name):
    p = BUILTIN[name]()
    again = parse_poset(format_poset(p))
    assert again.size == p.size and sorted(again.relations()) == sorted(p.relations())


def test_load_poset_by_builtin_name_and_stem(tmp_path):
    assert load_poset("chain2").size == 2
    assert load_poset("chain2.poset").size == 2
    f = tmp_path / "mine.poset"
    f.write_text("poset mine size=3\ncover 0 1\ncover 2 1\n")
    assert load_poset(str(f)).lt(2, 1)
    with pytest.raises(PosetError):
        load_poset("no-such-poset")


def test_poset_file_errors():
    with pytest.raises(PosetError):
        parse_poset("cover 0 1\n")
    with pytest.raises(PosetError):
        parse_poset("poset x size=2\nedge 0 1\n")
