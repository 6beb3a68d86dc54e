import json
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_copies
from treesat.lattice import CapExceeded, Family, middle_levels, subset_mask
from treesat.posets import antichain, chain, height, suite, v_poset
from treesat.supersat import (
    CopyCollection,
    build_balanced,
    count_induced_copies,
    enumerate_copies,
    frontier_bound,
    mstar,
    rank_upper_bound,
    replay_audit,
    verify_supersaturation,
    z_set,
)


def S(*elems):
    return subset_mask(elems)


# --- copy oracle ----------------------------------------------------------------------

def test_copy_examples():
    assert count_induced_copies(Family.full(2), chain(2)) == (5, 5)
    assert count_induced_copies(Family.of(3, [0, S(1), S(1, 2)]), antichain(2)) == (0, 0)
    assert count_induced_copies(Family.of(2, [0, S(1), S(2)]), v_poset()) == (1, 2)


def test_copy_cap():
    with pytest.raises(CapExceeded):
        count_induced_copies(Family.full(4), chain(2), cap=8)


@pytest.mark.parametrize("P", suite(), ids=lambda p: p.name)
def test_copies_match_brute_force(P):
    rng = random.Random(5)
    for n in (3, 4):
        fam = Family.of(n, [m for m in range(1 << n) if rng.random() < 0.5])
        copies, maps = brute_copies(fam, P)
        assert count_induced_copies(fam, P) == (len(copies), maps)
        assert enumerate_copies(fam, P) == copies


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4).flatmap(lambda n: st.tuples(
    st.just(n), st.sets(st.integers(0, (1 << n) - 1)), st.integers(0, (1 << n) - 1))),
    st.sampled_from(suite()))
def test_copies_monotone_under_adding_members(args, P):
    n, ms, extra = args
    fam = Family.of(n, ms)
    more = Family.of(n, list(ms) + [extra])
    assert count_induced_copies(fam, P)[0] <= count_induced_copies(more, P)[0]


# --- M* and the rank bound -------------------------------------------------------------

def test_mstar_examples():
    assert mstar(4, 1, antichain(2)) == math.comb(6, 2)
    assert mstar(4, 2, chain(2)) == 12
    assert mstar(5, 1, chain(2)) == 0


def test_rank_bound_examples():
    assert rank_upper_bound(4, 2, chain(2)) == 24
    assert rank_upper_bound(4, 1, chain(2)) == 0
    for n in (3, 4, 5):
        assert rank_upper_bound(n, 2, v_poset()) == n * n * math.comb(n, n // 2)


@pytest.mark.parametrize("P", suite(), ids=lambda p: p.name)
def test_mstar_is_middle_level_copies_and_below_rank_bound(P):
    for n in range(1, 6):
        for q in range(1, 5):
            if q > n + 1:
                continue
            m = mstar(n, q, P)
            if height(P) <= q:
                assert m == len(brute_copies(middle_levels(n, q).family(n), P)[0])
            assert m <= rank_upper_bound(n, q, P)


# --- supersaturation report -------------------------------------------------------------

def test_middle_levels_ratio_is_one():
    fam = middle_levels(5, 2).family(5)
    rep = verify_supersaturation(fam, chain(2), 2, Fraction(1, 4))
    assert rep.ratio == 1


def test_single_level_has_no_two_chain():
    rep = verify_supersaturation(Family.level(5, 2), chain(2), 2, Fraction(1, 4))
    assert rep.copies == 0 and rep.ratio == 0


def test_report_lower_bound_fields():
    rep = verify_supersaturation(Family.full(3), chain(2), 2, Fraction(1, 4), gamma=Fraction(1, 2), ell=1, N=4)
    data = rep.to_json()
    assert data["embedding_lower_bound_params"] == {"gamma": "1/2", "ell": 1, "N": 4}
    assert Fraction(data["embedding_lower_bound"]) == Fraction(1, 4) * 3 * 4
    json.dumps(data)


# --- balanced collections ---------------------------------------------------------------

def test_degenerate_cap_gives_empty_collection():
    res = build_balanced(Family.full(4), chain(2), Fraction(1, 8), 1)
    assert res.collection.cap(1) == 0
    assert len(res.collection) == 0


def test_two_chain_in_b4_respects_caps():
    res = build_balanced(Family.full(4), chain(2), Fraction(1, 2), 1)
    H = res.collection
    assert (H.cap(1), H.cap(2)) == (2, 1)
    assert H.max_degree(1) <= 2 and H.max_degree(2) <= 1
    assert len(set(H.edges)) == len(H.edges)
    assert replay_audit(H) == [] and H.audit() == []
    assert res.frontier_violations == []


def test_builder_rejects_non_gapped_family():
    with pytest.raises(ValueError):
        build_balanced(Family.full(3), chain(2), Fraction(1, 2), 2)


def test_z_set_empty_for_empty_collection():
    H = CopyCollection(Family.full(3), chain(2), Fraction(1, 2), 1)
    assert len(z_set([S(1)], H)) == 0


def test_z_set_picks_up_a_newly_saturated_pair():
    fam = Family.full(3)
    H = CopyCollection(fam, v_poset(), Fraction(2, 3), 1)    # delta n = 2
    assert H.cap(2) == 2
    H.add([0, S(1), S(2)])
    assert 0 not in z_set([S(1)], H)                           # one copy short
    H.add([0, S(1), S(3)])
    assert 0 in z_set([S(1)], H)
    with pytest.raises(ValueError):
        z_set([0, S(1)], H)


def test_collection_json_round_trip_and_audit():
    res = build_balanced(Family.full(4), chain(2), Fraction(1, 2), 1)
    data = json.loads(res.collection.dumps())
    again = CopyCollection.from_json(data)
    assert again.edges == res.collection.edges
    assert replay_audit(again) == []


def test_collection_audit_catches_non_copy():
    H = CopyCollection(Family.full(3), chain(2), 1, 1)
    H.add([S(1), S(2)])
    assert any("not an induced copy" in p for p in H.audit())


@pytest.mark.parametrize("P", [chain(2), v_poset(), chain(3)], ids=lambda p: p.name)
@pytest.mark.parametrize("delta", [Fraction(1, 4), Fraction(1, 2)])
def test_builder_frontier_and_caps_on_b5(P, delta):
    fam = Family.full(5)
    res = build_balanced(fam, P, delta, 1)
    H = res.collection
    assert res.status in ("target", "exhausted")
    for j in range(1, P.size + 1):
        assert H.max_degree(j) <= H.bound(j)
    assert res.frontier_violations == []
    assert replay_audit(H) == []
    assert frontier_bound(1, H) == 4 * delta * P.size * 5
