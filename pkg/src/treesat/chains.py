"""Full chains, marked-chain families and exact chain-hit probabilities.

A full chain of B_n is a permutation ``perm`` of ``range(n)``; its members
are the prefix unions ``0, {perm[0]}, {perm[0], perm[1]}, ...``. Chains are
identified by the lexicographic rank of their permutation, which is also
the order :func:`full_chains` produces them in.

A 1-marked family ``T`` maps chain ranks to the markers on that chain,
listed by decreasing cardinality, so index ``a`` of a marker list is the
marker's position (0-based) from the top. ``T[q]`` is never materialised;
:class:`QMarkedView` answers the queries the cleaning and embedding code
need directly from the marker lists.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator

import numpy as np

from .lattice import CapExceeded, Family, check_mask, complement, popcount

CHAIN_CAP = 8
HIT_CAP = 22


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise CapExceeded(f"enumerating {n}! full chains exceeds the cap n <= {cap}")


@dataclass(frozen=True)
class FullChain:
    perm: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError(f"{self.perm} is not a permutation")

    @property
    def n(self) -> int:
        return len(self.perm)

    @cached_property
    def members(self) -> tuple[int, ...]:
        """The n+1 members, smallest first."""
        out = [0]
        m = 0
        for e in self.perm:
            m |= 1 << e
            out.append(m)
        return tuple(out)

    def __contains__(self, mask: object) -> bool:
        if not isinstance(mask, int) or mask < 0 or mask >> self.n:
            return False
        return self.members[popcount(mask)] == mask

    @cached_property
    def rank(self) -> int:
        return perm_rank(self.perm)

    @classmethod
    def from_rank(cls, rank: int, n: int) -> "FullChain":
        return cls(perm_unrank(rank, n))


def perm_rank(perm: tuple[int, ...]) -> int:
    """Lexicographic rank via the Lehmer code."""
    n = len(perm)
    rank = 0
    remaining = list(range(n))
    for i, e in enumerate(perm):
        j = remaining.index(e)
        rank += j * math.factorial(n - 1 - i)
        remaining.pop(j)
    return rank


def perm_unrank(rank: int, n: int) -> tuple[int, ...]:
    if not 0 <= rank < math.factorial(n):
        raise ValueError(f"rank {rank} out of range for n={n}")
    remaining = list(range(n))
    out = []
    for i in range(n):
        f = math.factorial(n - 1 - i)
        j, rank = divmod(rank, f)
        out.append(remaining.pop(j))
    return tuple(out)


def full_chains(n: int, cap: int = CHAIN_CAP) -> Iterator[FullChain]:
    _check_cap(n, cap)
    for perm in itertools.permutations(range(n)):
        yield FullChain(perm)


def chains_through(mask: int, n: int, cap: int = CHAIN_CAP) -> Iterator[FullChain]:
    """The |F|!(n-|F|)! full chains through F, in rank order."""
    _check_cap(n, cap)
    check_mask(mask, n)
    inside = [e for e in range(n) if mask >> e & 1]
    outside = [e for e in range(n) if not mask >> e & 1]
    for head in itertools.permutations(inside):
        for tail in itertools.permutations(outside):
            yield FullChain(head + tail)


def _chain_prefixes(n: int, cap: int) -> Iterator[tuple[int, tuple[int, ...]]]:
    """(rank, members smallest-first) for every full chain, cheaply."""
    _check_cap(n, cap)
    for rank, perm in enumerate(itertools.permutations(range(n))):
        m = 0
        members = [0]
        for e in perm:
            m |= 1 << e
            members.append(m)
        yield rank, tuple(members)


@dataclass(frozen=True)
class MarkedChainFamily:
    """A 1-marked chain family: chain rank -> markers, largest first."""

    n: int
    markers: dict = field(default_factory=dict)
    q: int | None = None

    def __post_init__(self):
        clean = {r: tuple(ms) for r, ms in self.markers.items() if ms}
        object.__setattr__(self, "markers", dict(sorted(clean.items())))
        if self.q is not None and not self.is_q_strong(self.q):
            raise ValueError(f"family tagged {self.q}-strong has a chain with fewer markers")

    @property
    def size(self) -> int:
        """|T|: the number of (chain, marker) incidences."""
        return sum(len(ms) for ms in self.markers.values())

    def __len__(self) -> int:
        return self.size

    def chain_ranks(self) -> list[int]:
        return list(self.markers)

    def at(self, rank: int) -> tuple[int, ...]:
        return self.markers.get(rank, ())

    def is_q_strong(self, q: int) -> bool:
        return all(len(ms) >= q for ms in self.markers.values())

    def is_subfamily_of(self, other: "MarkedChainFamily") -> bool:
        return all(set(ms) <= set(other.at(r)) for r, ms in self.markers.items())

    def check(self) -> None:
        """Every marker lies on its chain and lists are strictly decreasing."""
        for r, ms in self.markers.items():
            chain = FullChain.from_rank(r, self.n)
            sizes = [popcount(m) for m in ms]
            if sizes != sorted(sizes, reverse=True) or len(set(sizes)) != len(sizes):
                raise ValueError(f"chain {r}: markers not strictly decreasing")
            for m in ms:
                if chain.members[popcount(m)] != m:
                    raise ValueError(f"chain {r}: marker {m:#x} is not on the chain")

    def marker_set(self) -> Family:
        return Family(self.n, tuple({m for ms in self.markers.values() for m in ms}))

    def to_json(self) -> dict:
        return {"n": self.n, "q": self.q, "markers": {str(r): list(ms) for r, ms in self.markers.items()}}


def build_strong_T(fam: Family, q: int, cap: int = CHAIN_CAP) -> MarkedChainFamily:
    """All (chain, F) with F on a chain carrying at least q members of ``fam``."""
    if q < 1:
        raise ValueError("q must be positive")
    members = fam.as_set
    out = {}
    for rank, chain in _chain_prefixes(fam.n, cap):
        on = [m for m in reversed(chain) if m in members]
        if len(on) >= q:
            out[rank] = tuple(on)
    return MarkedChainFamily(fam.n, out, q)


def count_q_marked(fam: Family, q: int, cap: int = CHAIN_CAP) -> int:
    """Number of q-marked chains with markers in ``fam``: sum of binom(|chain & fam|, q)."""
    members = fam.as_set
    total = 0
    for _, chain in _chain_prefixes(fam.n, cap):
        total += math.comb(sum(1 for m in chain if m in members), q)
    return total


def incidence_count(fam: Family, cap: int = CHAIN_CAP) -> int:
    """Number of pairs (chain, F) with F in ``fam`` on the chain."""
    members = fam.as_set
    return sum(sum(1 for m in chain if m in members) for _, chain in _chain_prefixes(fam.n, cap))


class QMarkedView:
    """The q-th power ``T[q]`` of a q-strong family, evaluated lazily."""

    def __init__(self, base: MarkedChainFamily, q: int):
        if q < 1:
            raise ValueError("q must be positive")
        if not base.is_q_strong(q):
            raise ValueError(f"base family is not {q}-strong")
        self.base = base
        self.q = q
        self.n = base.n

    def __repr__(self) -> str:
        return f"QMarkedView(q={self.q}, chains={len(self.base.markers)}, |T|={self.base.size})"

    def __iter__(self) -> Iterator[tuple[int, tuple[int, ...]]]:
        for rank, ms in self.base.markers.items():
            for qc in itertools.combinations(ms, self.q):
                yield rank, qc

    def __len__(self) -> int:
        return sum(math.comb(len(ms), self.q) for ms in self.base.markers.values())

    @cached_property
    def _index(self) -> dict[int, list[tuple[int, int]]]:
        idx: dict[int, list[tuple[int, int]]] = defaultdict(list)
        for rank, ms in self.base.markers.items():
            for a, m in enumerate(ms):
                idx[m].append((rank, a))
        return dict(idx)

    def occurrences(self, mask: int, i: int) -> Iterator[tuple[int, int]]:
        """(rank, 0-based index) of chains where ``mask`` can be the i-th member."""
        q = self.q
        for rank, a in self._index.get(mask, ()):
            length = len(self.base.markers[rank])
            if a >= i - 1 and length - 1 - a >= q - i:
                yield rank, a

    def count_at(self, mask: int, i: int) -> int:
        """|M(F, i)|."""
        q = self.q
        total = 0
        for rank, a in self.occurrences(mask, i):
            length = len(self.base.markers[rank])
            total += math.comb(a, i - 1) * math.comb(length - 1 - a, q - i)
        return total

    def marked_at(self, mask: int, i: int) -> Iterator[tuple[int, tuple[int, ...]]]:
        """All (rank, Q) in M(F, i)."""
        self._check_position(i)
        q = self.q
        for rank, a in self.occurrences(mask, i):
            ms = self.base.markers[rank]
            for top in itertools.combinations(ms[:a], i - 1):
                for bottom in itertools.combinations(ms[a + 1:], q - i):
                    yield rank, top + (mask,) + bottom

    def level_set(self, i: int) -> Family:
        self._check_position(i)
        q = self.q
        out = set()
        for ms in self.base.markers.values():
            out.update(ms[i - 1: len(ms) - (q - i)])
        return Family(self.n, tuple(out))

    def tails(self, mask: int, i: int, side: str) -> set[tuple[int, ...]]:
        """Distinct parts of Q in M(F, i) strictly below (or above) F."""
        self._check_position(i)
        q = self.q
        out: set[tuple[int, ...]] = set()
        for rank, a in self.occurrences(mask, i):
            ms = self.base.markers[rank]
            if side == "lower":
                out.update(itertools.combinations(ms[a + 1:], q - i))
            elif side == "upper":
                out.update(itertools.combinations(ms[:a], i - 1))
            else:
                raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")
        return out

    def partners(self, mask: int, i: int, s: int) -> dict[int, tuple[int, tuple[int, ...]]]:
        """Members G at position s of some Q in M(F, i), each with one certificate (rank, Q)."""
        self._check_position(i)
        self._check_position(s)
        if s == i:
            raise ValueError("partner position must differ from the anchor position")
        q = self.q
        out: dict[int, tuple[int, tuple[int, ...]]] = {}
        for rank, a in self.occurrences(mask, i):
            ms = self.base.markers[rank]
            length = len(ms)
            if s > i:
                for b in range(a + (s - i), length - (q - s)):
                    g = ms[b]
                    if g not in out:
                        qc = ms[: i - 1] + (mask,) + ms[a + 1: a + s - i] + (g,) + ms[b + 1: b + 1 + q - s]
                        out[g] = (rank, qc)
            else:
                for b in range(s - 1, a - (i - s) + 1):
                    g = ms[b]
                    if g not in out:
                        qc = ms[: s - 1] + (g,) + ms[b + 1: b + i - s] + (mask,) + ms[a + 1: a + 1 + q - i]
                        out[g] = (rank, qc)
        return out

    def contains(self, rank: int, qc: tuple[int, ...]) -> bool:
        ms = set(self.base.at(rank))
        return len(qc) == self.q and set(qc) <= ms

    def _check_position(self, i: int) -> None:
        if not 1 <= i <= self.q:
            raise ValueError(f"position {i} outside 1..{self.q}")


def power_view(T: MarkedChainFamily, q: int) -> QMarkedView:
    return QMarkedView(T, q)


def level_set(M: QMarkedView, i: int) -> Family:
    return M.level_set(i)


def marked_at(M: QMarkedView, mask: int, i: int) -> Iterator[tuple[int, tuple[int, ...]]]:
    return M.marked_at(mask, i)


# --- chain-hit probabilities --------------------------------------------------

def _side_of(mask: int, w: Iterable[int], side: str, n: int) -> list[int]:
    ws = list(w)
    for d in ws:
        check_mask(d, n)
    if side == "lower":
        bad = [d for d in ws if d & ~mask]
    elif side == "upper":
        bad = [d for d in ws if mask & ~d]
    else:
        raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")
    if bad:
        raise ValueError(f"W has members off the {side} side of F: {[hex(d) for d in bad]}")
    return ws


def _to_lower(mask: int, ws: list[int], side: str, n: int) -> tuple[int, list[int]]:
    if side == "upper":
        return complement(mask, n), [complement(d, n) for d in ws]
    return mask, ws


def hit_probability(mask: int, w: Family, side: str = "lower") -> Fraction:
    """P[a uniform full chain through F meets W], exactly.

    Counts saturated chains of the interval [0, F] (or [F, [n]]) that avoid
    W with the subset recursion g(D) = [D not in W] * sum_x g(D - x).
    """
    n = w.n
    ws = _side_of(mask, w, side, n)
    f, ws = _to_lower(mask, ws, side, n)
    k = popcount(f)
    if k > HIT_CAP:
        raise CapExceeded(f"|F| = {k} exceeds the subset-DP cap {HIT_CAP}")
    if not ws:
        return Fraction(0)
    bits = [1 << e for e in range(n) if f >> e & 1]
    wset = set(ws)
    size = 1 << k
    masks = [0] * size
    g = [0] * size
    g[0] = 0 if 0 in wset else 1
    for s in range(1, size):
        low = s & -s
        masks[s] = masks[s ^ low] | bits[low.bit_length() - 1]
        if masks[s] in wset:
            continue
        acc = 0
        t = s
        while t:
            b = t & -t
            acc += g[s ^ b]
            t ^= b
        g[s] = acc
    return 1 - Fraction(g[size - 1], math.factorial(k))


def chain_hit_count(mask: int, w: Iterable[int], side: str, n: int) -> int:
    """Saturated chains of [0, F] (resp. [F, [n]]) meeting W, by first-hit counting.

    f(D) = |D|! - sum over D' in W strictly below D of f(D') (|D| - |D'|)!
    counts chains whose first W-member is D; O(|W|^2) work.
    """
    ws = _side_of(mask, w, side, n)
    f, ws = _to_lower(mask, ws, side, n)
    return _first_hit_count(popcount(f), ws)


def _first_hit_count(k: int, ws: list[int]) -> int:
    if not ws:
        return 0
    ws = sorted(set(ws), key=popcount)
    fact = math.factorial
    first: list[int] = []
    hits = 0
    for idx, d in enumerate(ws):
        kd = popcount(d)
        v = fact(kd)
        for jdx in range(idx):
            e = ws[jdx]
            if e & ~d == 0 and e != d:
                v -= first[jdx] * fact(kd - popcount(e))
        first.append(v)
        hits += v * fact(k - kd)
    return hits


def interval_chain_count(mask: int, side: str, n: int) -> int:
    """Number of saturated chains in [0, F] or [F, [n]]."""
    k = popcount(mask) if side == "lower" else n - popcount(mask)
    return math.factorial(k)


def hit_probability_sparse(mask: int, w: Iterable[int], side: str, n: int) -> Fraction:
    """Same quantity as :func:`hit_probability`, computed by first-hit counting.

    Used inside searches where W is small and the subset DP would dominate.
    """
    return Fraction(chain_hit_count(mask, w, side, n), interval_chain_count(mask, side, n))


def lubell_upper_bound(mask: int, w: Iterable[int], side: str, n: int) -> Fraction:
    """Union bound: sum over D of 1/binom(|F|, |F - D|) (or the upper analogue)."""
    ws = _side_of(mask, w, side, n)
    f, ws = _to_lower(mask, ws, side, n)
    k = popcount(f)
    return sum((Fraction(1, math.comb(k, k - popcount(d))) for d in set(ws)), Fraction(0))


@dataclass(frozen=True)
class MCEstimate:
    estimate: float
    hits: int
    samples: int
    seed: int


def hit_probability_mc(mask: int, w: Family, side: str, samples: int, seed: int) -> MCEstimate:
    """Seeded Monte Carlo estimate for ground sets beyond the exact caps."""
    n = w.n
    ws = _side_of(mask, w, side, n)
    f, ws = _to_lower(mask, ws, side, n)
    wset = set(ws)
    bits = np.array([1 << e for e in range(n) if f >> e & 1], dtype=np.int64)
    rng = np.random.Generator(np.random.Philox(seed))
    hits = 0
    for _ in range(samples):
        order = rng.permutation(bits)
        m = 0
        hit = 0 in wset
        for b in order:
            if hit:
                break
            m |= int(b)
            hit = m in wset
        hits += hit
    return MCEstimate(hits / samples if samples else float("nan"), hits, samples, seed)
