"""Induced-copy oracles, the rank-function bound and balanced copy collections.

A copy of P in a family is an unordered set of |P| members inducing P; an
embedding is an injective induced homomorphism. Every copy carries exactly
|Aut(P)| embeddings, so the two counts differ by that factor.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .chains import QMarkedView
from .cleaning import clean_pipeline
from .embedding import BoundedForbidden, embed_enumerate
from .lattice import CapExceeded, Family, is_l_gapped, lubell_weight, middle_levels
from .posets import Poset, are_isomorphic, height, induced_poset_of, is_tree_poset, rank_functions

ORACLE_CAP = 4096


def _relation_bits(members: tuple[int, ...]) -> tuple[list[int], list[int], list[int]]:
    """Per member: bitsets (over member indices) of strict supersets, strict subsets, incomparables."""
    k = len(members)
    sup = [0] * k
    sub = [0] * k
    inc = [0] * k
    for a in range(k):
        ma = members[a]
        for b in range(k):
            if a == b:
                continue
            mb = members[b]
            if ma & ~mb == 0:
                sup[a] |= 1 << b
            elif mb & ~ma == 0:
                sub[a] |= 1 << b
            else:
                inc[a] |= 1 << b
    return sup, sub, inc


def iter_embeddings(fam: Family, P: Poset, cap: int = ORACLE_CAP) -> Iterator[tuple[int, ...]]:
    """All injective induced homomorphisms P -> fam, as tuples masks[x]."""
    members = fam.members
    if len(members) > cap:
        raise CapExceeded(f"|fam| = {len(members)} exceeds the oracle cap {cap}")
    if P.size == 0:
        return
    sup, sub, inc = _relation_bits(members)
    everything = (1 << len(members)) - 1
    chosen = [0] * P.size

    def rec(x: int, used: int) -> Iterator[tuple[int, ...]]:
        if x == P.size:
            yield tuple(members[c] for c in chosen)
            return
        allowed = everything & ~used
        for z in range(x):
            c = chosen[z]
            if P.lt(z, x):
                allowed &= sup[c]
            elif P.lt(x, z):
                allowed &= sub[c]
            else:
                allowed &= inc[c]
            if not allowed:
                return
        while allowed:
            low = allowed & -allowed
            c = low.bit_length() - 1
            chosen[x] = c
            yield from rec(x + 1, used | low)
            allowed ^= low

    yield from rec(0, 0)


def count_induced_copies(fam: Family, P: Poset, cap: int = ORACLE_CAP) -> tuple[int, int]:
    """(copies, embeddings) of P in ``fam``."""
    emb = sum(1 for _ in iter_embeddings(fam, P, cap))
    aut = P.automorphism_count
    if emb % aut:
        raise AssertionError("embedding count is not a multiple of |Aut(P)|")
    return emb // aut, emb


def enumerate_copies(fam: Family, P: Poset, cap: int = ORACLE_CAP) -> set[frozenset[int]]:
    """Every copy of P in ``fam`` as a frozenset of masks."""
    return {frozenset(e) for e in iter_embeddings(fam, P, cap)}


def mstar(n: int, q: int, P: Poset, cap: int = ORACLE_CAP) -> int:
    """Copies of P inside the q middle levels of B_n."""
    if height(P) > q or q > n + 1:
        return 0
    return count_induced_copies(middle_levels(n, q).family(n), P, cap)[0]


def rank_upper_bound(n: int, q: int, P: Poset) -> int:
    """Sum over rank functions r of prod over Hasse edges of n^|r(x)-r(y)|, times binom(n, n//2)."""
    total = 0
    for r in rank_functions(P, q):
        term = 1
        for x, y in P.hasse.covers:
            term *= n ** abs(r(x) - r(y))
        total += term
    return total * math.comb(n, n // 2)


def embedding_lower_bound(n: int, P: Poset, q: int, gamma, ell: int, N: int) -> Fraction:
    """max over rank functions of (gamma/2)^(|P|-1) prod n^(ell |r(y)-r(x)|) * N."""
    gamma = Fraction(gamma)
    best = Fraction(0)
    for r in rank_functions(P, q):
        term = Fraction(1)
        for x, y in P.hasse.covers:
            term *= n ** (ell * abs(r(x) - r(y)))
        best = max(best, (gamma / 2) ** (P.size - 1) * term * N)
    return best


@dataclass
class SupersatReport:
    n: int
    q: int
    poset: str
    family_size: int
    lubell: Fraction
    copies: int
    embeddings: int
    mstar: int
    ratio: Fraction | None
    size_threshold: Fraction
    lower_bound: Fraction | None = None
    lower_bound_params: dict | None = None

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "q": self.q,
            "poset": self.poset,
            "family_size": self.family_size,
            "lubell_weight": str(self.lubell),
            "copies": self.copies,
            "embeddings": self.embeddings,
            "mstar": self.mstar,
            "ratio": None if self.ratio is None else str(self.ratio),
            "size_threshold": str(self.size_threshold),
            "embedding_lower_bound": None if self.lower_bound is None else str(self.lower_bound),
            "embedding_lower_bound_params": self.lower_bound_params,
        }


def verify_supersaturation(fam: Family, P: Poset, q: int, eps, gamma=None, ell: int | None = None,
                           N: int | None = None, cap: int = ORACLE_CAP) -> SupersatReport:
    n = fam.n
    copies, emb = count_induced_copies(fam, P, cap)
    ms = mstar(n, q, P, cap)
    threshold = (q - 1 + Fraction(eps)) * math.comb(n, n // 2)
    report = SupersatReport(n, q, P.name, len(fam), lubell_weight(fam), copies, emb, ms,
                            Fraction(copies, ms) if ms else None, threshold)
    if gamma is not None and ell is not None and N is not None:
        report.lower_bound = embedding_lower_bound(n, P, q, gamma, ell, N)
        report.lower_bound_params = {"gamma": str(Fraction(gamma)), "ell": ell, "N": N}
    return report


# --- balanced collections --------------------------------------------------------

class CopyCollection:
    """A |P|-uniform hypergraph of copies with an exact degree index."""

    def __init__(self, ground: Family, P: Poset, delta=Fraction(1), ell: int = 1):
        self.ground = ground
        self.P = P
        self.delta = Fraction(delta)
        self.ell = ell
        self.edges: list[frozenset[int]] = []
        self._edge_set: set[frozenset[int]] = set()
        self.degree: dict[frozenset[int], int] = {}

    def __len__(self) -> int:
        return len(self.edges)

    def __contains__(self, edge) -> bool:
        return frozenset(edge) in self._edge_set

    @property
    def scale(self) -> Fraction:
        """delta * n^ell."""
        return self.delta * self.ground.n ** self.ell

    def cap(self, j: int) -> int:
        """floor((delta n^ell)^(|P| - j))."""
        return math.floor(self.scale ** (self.P.size - j))

    def bound(self, j: int) -> Fraction:
        return self.scale ** (self.P.size - j)

    def deg(self, d) -> int:
        d = frozenset(d)
        if not d:
            return len(self.edges)
        return self.degree.get(d, 0)

    def add(self, edge) -> None:
        e = frozenset(edge)
        if len(e) != self.P.size:
            raise ValueError(f"edge has {len(e)} members, expected {self.P.size}")
        if e in self._edge_set:
            raise ValueError("duplicate edge")
        self.edges.append(e)
        self._edge_set.add(e)
        items = sorted(e)
        for size in range(1, len(items) + 1):
            for d in itertools.combinations(items, size):
                key = frozenset(d)
                self.degree[key] = self.degree.get(key, 0) + 1

    def max_degree(self, j: int) -> int:
        if j == 0:
            return len(self.edges)
        return max((v for k, v in self.degree.items() if len(k) == j), default=0)

    def is_saturated(self, d) -> bool:
        d = frozenset(d)
        return 1 <= len(d) <= self.P.size and self.deg(d) >= self.cap(len(d))

    def is_admissible(self, k) -> bool:
        items = sorted(frozenset(k))
        if len(items) > self.P.size:
            return False
        for size in range(1, len(items) + 1):
            for d in itertools.combinations(items, size):
                if self.is_saturated(d):
                    return False
        return True

    def degree_caps_hold(self) -> bool:
        return all(self.max_degree(j) <= self.bound(j) for j in range(1, self.P.size + 1))

    def audit(self) -> list[str]:
        """Re-check every edge, the degree index and the caps from scratch."""
        problems = []
        members = self.ground.as_set
        fresh: dict[frozenset[int], int] = {}
        for e in self.edges:
            if not e <= members:
                problems.append(f"edge {sorted(e)} leaves the ground family")
            if not are_isomorphic(induced_poset_of(sorted(e)), self.P):
                problems.append(f"edge {sorted(e)} is not an induced copy")
            items = sorted(e)
            for size in range(1, len(items) + 1):
                for d in itertools.combinations(items, size):
                    fresh[frozenset(d)] = fresh.get(frozenset(d), 0) + 1
        if len(set(self.edges)) != len(self.edges):
            problems.append("duplicate edges")
        if fresh != self.degree:
            problems.append("degree index out of date")
        for j in range(1, self.P.size + 1):
            if self.max_degree(j) > self.bound(j):
                problems.append(f"max {j}-degree {self.max_degree(j)} exceeds {self.bound(j)}")
        return problems

    def to_json(self) -> dict:
        return {
            "n": self.ground.n,
            "ground": list(self.ground.members),
            "poset": {"name": self.P.name, "size": self.P.size, "covers": [list(c) for c in self.P.hasse.covers]},
            "delta": str(self.delta),
            "ell": self.ell,
            "caps": {str(j): self.cap(j) for j in range(1, self.P.size + 1)},
            "edges": [sorted(e) for e in self.edges],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data: dict) -> "CopyCollection":
        n = data["n"]
        P = Poset.from_covers(data["poset"]["size"], [tuple(c) for c in data["poset"]["covers"]],
                              data["poset"]["name"])
        h = cls(Family(n, tuple(data["ground"])), P, Fraction(data["delta"]), data["ell"])
        for e in data["edges"]:
            h.add(e)
        return h


def z_set(k, H: CopyCollection) -> Family:
    """Members F of the unsaturated ground with K + {F} inadmissible."""
    k = frozenset(k)
    if not H.is_admissible(k):
        raise ValueError("K is inadmissible")
    out = []
    for f in H.ground:
        if f in k or H.is_saturated([f]):
            continue
        if not H.is_admissible(k | {f}):
            out.append(f)
    return Family(H.ground.n, tuple(out))


def frontier_bound(k_size: int, H: CopyCollection) -> Fraction:
    """2^|K| * 2 delta |P| n^ell."""
    return 2 ** k_size * 2 * H.delta * H.P.size * H.ground.n ** H.ell


@dataclass
class BalancedResult:
    collection: CopyCollection
    target: Fraction
    status: str                      # "target" or "exhausted"
    frontier_checks: int = 0
    frontier_violations: list = field(default_factory=list)
    max_frontier_ratio: Fraction = Fraction(0)

    def to_json(self) -> dict:
        out = self.collection.to_json()
        out.update({
            "target": str(self.target),
            "status": self.status,
            "size": len(self.collection),
            "frontier_checks": self.frontier_checks,
            "frontier_violations": len(self.frontier_violations),
            "max_frontier_ratio": str(self.max_frontier_ratio),
        })
        return out


class _StopBuild(Exception):
    pass


def build_balanced(fam: Family, P: Poset, delta, ell: int, q: int | None = None,
                   clean_delta=0, audit_frontier: bool = True,
                   nested: list[QMarkedView] | None = None) -> BalancedResult:
    """Greedily add copies whose every subset stays below its degree cap.

    Copies come from the marked-chain embedder with the inadmissible sets as
    the forbidden collection. The collection changes while the search runs,
    so each copy is re-checked for admissibility just before it is added.
    """
    if not is_l_gapped(fam, ell):
        raise ValueError(f"family is not {ell}-gapped")
    if not is_tree_poset(P):
        raise ValueError(f"{P!r} is not a tree poset")
    delta = Fraction(delta)
    q = height(P) if q is None else q
    n = fam.n
    if nested is None:
        nested = clean_pipeline(fam, q, clean_delta, P.size).views
    H = CopyCollection(fam, P, delta, ell)
    target = delta ** P.size * Fraction(n) ** (ell * (P.size - 1)) * math.comb(n, n // 2)
    result = BalancedResult(H, target, "exhausted")
    checked: set = set()

    def audit(k: frozenset) -> None:
        key = (len(H), k)
        if key in checked:
            return
        checked.add(key)
        z = len(z_set(k, H))
        bound = frontier_bound(len(k), H)
        result.frontier_checks += 1
        if bound:
            result.max_frontier_ratio = max(result.max_frontier_ratio, Fraction(z) / bound)
        if z > bound:
            result.frontier_violations.append((len(H), sorted(k), z, bound))

    def forbidden(k: frozenset) -> bool:
        if audit_frontier:
            for f in k:
                rest = k - {f}
                if rest and H.is_admissible(rest):
                    audit(rest)
        return not H.is_admissible(k)

    gamma_family = BoundedForbidden.from_predicate(forbidden)
    if target <= 0:
        result.status = "target"
        return result
    try:
        for root in range(P.size):
            for r in rank_functions(P, q):
                for f0 in nested[-1].level_set(r(root)):
                    for emb in embed_enumerate(fam, P, r, gamma_family, nested, root, f0):
                        k = emb.image()
                        if k in H or not H.is_admissible(k):
                            continue
                        H.add(k)
                        if len(H) >= target:
                            raise _StopBuild
    except _StopBuild:
        result.status = "target"
    return result


def replay_audit(H: CopyCollection) -> list[str]:
    """Rebuild the collection edge by edge; each edge must have been admissible when added."""
    problems = []
    replay = CopyCollection(H.ground, H.P, H.delta, H.ell)
    for t, e in enumerate(H.edges):
        if e in replay:
            problems.append(f"edge {t} duplicates an earlier edge")
            continue
        if not replay.is_admissible(e):
            problems.append(f"edge {t} was inadmissible when added")
        replay.add(e)
        if not replay.degree_caps_hold():
            problems.append(f"degree caps fail after edge {t}")
    problems.extend(replay.audit())
    return problems
