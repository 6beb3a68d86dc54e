import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from oracles import (
    chain_incidences,
    hit_fraction_by_chains,
    level_set_brute,
    q_chains_at,
    q_marked_total,
    strong_markers,
    union_bound,
)
from treesat.chains import (
    FullChain,
    MarkedChainFamily,
    QMarkedView,
    build_strong_T,
    chain_hit_count,
    chains_through,
    count_q_marked,
    full_chains,
    hit_probability,
    hit_probability_mc,
    hit_probability_sparse,
    incidence_count,
    interval_chain_count,
    lubell_upper_bound,
    perm_rank,
    perm_unrank,
    power_view,
)
from treesat.lattice import CapExceeded, Family, forbidden_down, is_in_tilde, lubell_weight, popcount, subset_mask


def S(*elems):
    return subset_mask(elems)


def families(min_n=1, max_n=5):
    return st.integers(min_n, max_n).flatmap(
        lambda n: st.sets(st.integers(0, (1 << n) - 1)).map(lambda ms: Family.of(n, ms)))


@st.composite
def lower_instances(draw, min_n=1, max_n=6):
    n = draw(st.integers(min_n, max_n))
    f = draw(st.integers(0, (1 << n) - 1))
    subs = [d for d in range(1 << n) if d & ~f == 0]
    w = draw(st.sets(st.sampled_from(subs), max_size=6))
    return n, f, Family.of(n, w)


# --- full chains -----------------------------------------------------------------------

def test_chain_counts():
    assert len(list(full_chains(3))) == 6
    assert len(list(chains_through(S(1), 3))) == 2
    assert len(list(chains_through(0, 4))) == 24


def test_chains_through_are_distinct_and_pass_f():
    chains = list(chains_through(S(1, 3), 4))
    assert len({c.rank for c in chains}) == 2 * 2
    assert all(S(1, 3) in c for c in chains)


def test_chain_cap_is_enforced():
    with pytest.raises(CapExceeded):
        list(full_chains(9))
    assert len(list(full_chains(3, cap=3))) == 6


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 7).flatmap(lambda n: st.tuples(st.just(n), st.permutations(range(n)))))
def test_perm_rank_round_trip(args):
    n, perm = args
    perm = tuple(perm)
    assert perm_unrank(perm_rank(perm), n) == perm
    assert FullChain.from_rank(perm_rank(perm), n).perm == perm


def test_perm_rank_is_lexicographic():
    perms = list(itertools.permutations(range(4)))
    assert [perm_rank(p) for p in perms] == list(range(24))


def test_full_chain_members_and_membership():
    c = FullChain((2, 0, 1))
    assert c.members == (0, S(3), S(1, 3), S(1, 2, 3))
    assert S(1, 3) in c and S(1, 2) not in c and 99 not in c


# --- marked chain families -------------------------------------------------------------

def test_strong_T_examples():
    assert build_strong_T(Family.full(2), 2).size == 6
    assert build_strong_T(Family.of(2, [S(1), S(2)]), 2).size == 0
    assert build_strong_T(Family.of(3), 1).size == 0


@settings(max_examples=30, deadline=None)
@given(families(1, 5), st.integers(1, 4))
def test_strong_T_matches_brute_force(fam, q):
    T = build_strong_T(fam, q)
    brute = strong_markers(fam, q)
    assert T.size == sum(len(v) for v in brute.values())
    assert {perm_rank(k): tuple(v) for k, v in brute.items()} == T.markers
    T.check()
    assert T.is_q_strong(q)


def test_tagged_family_must_be_strong():
    with pytest.raises(ValueError):
        MarkedChainFamily(2, {0: (S(1, 2),)}, q=2)


def test_marker_check_catches_off_chain_marker():
    # chain rank 0 in n = 2 is (1, 2): members 0, {1}, {1,2}
    with pytest.raises(ValueError):
        MarkedChainFamily(2, {0: (S(1, 2), S(2))}).check()


def test_power_view_examples():
    T = build_strong_T(Family.full(2), 2)
    M = power_view(T, 2)
    assert len(M) == 6 and len(list(M)) == 6
    single = MarkedChainFamily(2, {0: (S(1, 2), S(1))}, q=2)
    assert list(power_view(single, 2)) == [(0, (S(1, 2), S(1)))]


def test_power_view_requires_strength():
    T = build_strong_T(Family.full(2), 2)
    with pytest.raises(ValueError):
        QMarkedView(T, 4)


def test_count_q_marked_examples():
    assert count_q_marked(Family.full(2), 2) == 6
    fam = Family.of(4, [S(1), S(1, 2), S(1, 2, 3)])
    assert count_q_marked(fam, 1) == lubell_weight(fam) * 24
    assert count_q_marked(Family.level(4, 2), 2) == 0


@settings(max_examples=30, deadline=None)
@given(families(1, 5), st.integers(1, 4))
def test_count_q_marked_matches_brute(fam, q):
    assert count_q_marked(fam, q) == q_marked_total(fam, q)
    assert incidence_count(fam) == chain_incidences(fam)


def test_level_set_examples():
    M = power_view(build_strong_T(Family.full(2), 2), 2)
    assert M.level_set(1).members == (S(1), S(2), S(1, 2))
    single = power_view(MarkedChainFamily(3, {0: (S(1, 2), S(1))}, q=2), 2)
    assert single.level_set(2).members == (S(1),)
    assert power_view(MarkedChainFamily(3, {}), 2).level_set(1) == Family.of(3)
    with pytest.raises(ValueError):
        M.level_set(3)


def test_marked_at_example():
    M = power_view(build_strong_T(Family.full(2), 2), 2)
    got = list(M.marked_at(S(1), 2))
    assert [qc for _, qc in got] == [(S(1, 2), S(1))]
    assert M.count_at(S(1), 2) == 1
    assert list(power_view(MarkedChainFamily(2, {}), 2).marked_at(0, 1)) == []


@settings(max_examples=25, deadline=None)
@given(families(2, 5), st.integers(1, 3))
def test_view_queries_match_brute(fam, q):
    T = build_strong_T(fam, q)
    M = power_view(T, q)
    markers = {perm_rank(k): v for k, v in strong_markers(fam, q).items()}
    for i in range(1, q + 1):
        assert set(M.level_set(i)) == level_set_brute(markers, q, i)
        for f in fam:
            brute = sorted(q_chains_at(markers, q, f, i))
            assert sorted(M.marked_at(f, i)) == brute
            assert M.count_at(f, i) == len(brute)


@settings(max_examples=25, deadline=None)
@given(families(2, 5), st.integers(2, 3), st.data())
def test_partners_are_certified(fam, q, data):
    M = power_view(build_strong_T(fam, q), q)
    markers = {perm_rank(k): v for k, v in strong_markers(fam, q).items()}
    i = data.draw(st.integers(1, q))
    s = data.draw(st.sampled_from([t for t in range(1, q + 1) if t != i]))
    for f in fam:
        got = M.partners(f, i, s)
        brute = {qc[s - 1] for _, qc in q_chains_at(markers, q, f, i)}
        assert set(got) == brute
        for g, (rank, qc) in got.items():
            assert M.contains(rank, qc) and qc[i - 1] == f and qc[s - 1] == g


# --- hit probabilities -------------------------------------------------------------------

def test_hit_probability_examples():
    assert hit_probability(S(1, 2, 3), Family.of(3)) == 0
    assert hit_probability(S(1, 2, 3), Family.of(3, [0])) == 1
    assert hit_probability(S(1, 2, 3), Family.of(3, [S(1)])) == Fraction(1, 3)


def test_hit_probability_rejects_off_side_members():
    with pytest.raises(ValueError):
        hit_probability(S(1), Family.of(3, [S(2)]))
    with pytest.raises(ValueError):
        hit_probability(S(1), Family.of(3, [0]), "upper")
    with pytest.raises(ValueError):
        hit_probability(S(1), Family.of(3, [0]), "sideways")


def test_upper_side_example():
    # chains through {1} in [3] go up through {1,2} or {1,3} with equal odds
    assert hit_probability(S(1), Family.of(3, [S(1, 2)]), "upper") == Fraction(1, 2)
    assert hit_probability(S(1), Family.of(3, [S(1, 2, 3)]), "upper") == 1


@settings(max_examples=80, deadline=None)
@given(lower_instances(1, 6))
def test_hit_probability_matches_chain_enumeration(inst):
    n, f, w = inst
    p = hit_probability(f, w)
    assert p == hit_fraction_by_chains(f, w, n)
    assert p == hit_probability_sparse(f, w, "lower", n)
    assert p <= union_bound(f, w, "lower", n)
    assert p <= lubell_upper_bound(f, w, "lower", n)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, (1 << n) - 1), st.data())))
def test_upper_hit_probability_matches_chain_enumeration(args):
    n, f, data = args
    sups = [d for d in range(1 << n) if f & ~d == 0]
    w = Family.of(n, data.draw(st.sets(st.sampled_from(sups), max_size=5)))
    p = hit_probability(f, w, "upper")
    assert p == hit_fraction_by_chains(f, w, n)
    assert p <= union_bound(f, w, "upper", n)
    assert chain_hit_count(f, w, "upper", n) == p * interval_chain_count(f, "upper", n)


@settings(max_examples=40, deadline=None)
@given(lower_instances(2, 6), st.sets(st.integers(0, 63), max_size=3))
def test_hit_probability_is_monotone_in_w(inst, extra):
    n, f, w = inst
    more = Family.of(n, list(w) + [d & f for d in extra if d < 1 << n])
    assert hit_probability(f, w) <= hit_probability(f, more)


def test_central_band_hit_bound():
    """For F in the band and |W| <= n/6 the hit chance is at most 39|W|sqrt(n ln n)/n."""
    for n in range(2, 9):
        radius_ok = [m for m in range(1 << n) if is_in_tilde(m, n)]
        limit = n // 6
        for size in range(1, limit + 1):
            for f in radius_ok[:: max(1, len(radius_ok) // 12)]:
                outside = [g for g in radius_ok if f & ~g != 0][:8]
                for ws in itertools.combinations(outside, size):
                    bound = 39 * size * math.sqrt(n * math.log(n)) / n
                    p = hit_probability(f, forbidden_down(f, Family.of(n, ws)))
                    assert p <= 1 and (bound >= 1 or p <= bound)


def test_monte_carlo_is_seeded_and_close():
    f = S(1, 2, 3, 4)
    w = Family.of(5, [S(1), S(2, 3)])
    a = hit_probability_mc(f, w, "lower", 4000, seed=3)
    b = hit_probability_mc(f, w, "lower", 4000, seed=3)
    assert a == b and a.samples == 4000
    assert abs(a.estimate - float(hit_probability(f, w))) < 0.05


def test_hit_cap():
    with pytest.raises(CapExceeded):
        hit_probability((1 << 23) - 1, Family.of(23, [1]))


def test_popcount_sanity():
    assert popcount(S(1, 4, 7)) == 3
