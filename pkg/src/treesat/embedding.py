"""Greedy embedding of tree posets through nested marked-chain families.

Elements are placed in a breadth-first order of the Hasse tree. The k-th
element placed (0-based) must sit at its rank position on some q-chain of
``nested[|P| - k]`` that also carries its parent's image at the parent's
rank position. Members of the forbidden neighbourhood of the already placed
images are excluded, which keeps the partial map induced inside the central
slab. A forbidden collection ``Gamma`` of image sets is avoided throughout.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

from .chains import QMarkedView
from .lattice import CapExceeded, Family, forbidden_down, forbidden_up
from .posets import Poset, RankFunction, TreeOrder, is_induced_copy, is_tree_poset, rank_functions, tree_order

FRONTIER_CAP = 200_000


class BoundedForbidden:
    """A forbidden collection of image sets, given by membership.

    ``explicit`` lists the forbidden sets, ``upward`` forbids every superset of
    a generator, ``predicate`` wraps an arbitrary monotone membership test.
    ``frontier(D, fam)`` returns the F in ``fam`` with D + {F} forbidden.
    """

    def __init__(self, mode: str, sets: Iterable[Iterable[int]] = (),
                 predicate: Callable[[frozenset], bool] | None = None,
                 frontier: Callable[[frozenset, Family], set] | None = None):
        if mode not in ("explicit", "upward", "predicate"):
            raise ValueError(f"unknown mode {mode!r}")
        if mode == "predicate" and predicate is None:
            raise ValueError("predicate mode needs a predicate")
        self.mode = mode
        self.sets = frozenset(frozenset(s) for s in sets)
        self._predicate = predicate
        self._frontier = frontier

    @classmethod
    def empty(cls) -> "BoundedForbidden":
        return cls("explicit")

    @classmethod
    def explicit(cls, sets: Iterable[Iterable[int]]) -> "BoundedForbidden":
        return cls("explicit", sets)

    @classmethod
    def upward_closure(cls, generators: Iterable[Iterable[int]]) -> "BoundedForbidden":
        return cls("upward", generators)

    @classmethod
    def from_predicate(cls, predicate, frontier=None) -> "BoundedForbidden":
        return cls("predicate", predicate=predicate, frontier=frontier)

    @property
    def is_empty(self) -> bool:
        return self.mode != "predicate" and not self.sets

    def __contains__(self, image: Iterable[int]) -> bool:
        k = frozenset(image)
        if self.mode == "explicit":
            return k in self.sets
        if self.mode == "upward":
            return any(g <= k for g in self.sets)
        return self._predicate(k)

    def frontier(self, d: Iterable[int], fam: Family) -> set[int]:
        d = frozenset(d)
        if self._frontier is not None:
            return set(self._frontier(d, fam))
        return {f for f in fam if f not in d and (d | {f}) in self}

    def __repr__(self) -> str:
        return f"BoundedForbidden({self.mode}, {len(self.sets)} sets)"


def check_bounded(gamma_family: BoundedForbidden, fam: Family, gamma, ell: int,
                  depth: int, cap: int = FRONTIER_CAP) -> bool:
    """Both defining properties, checked over every D in ``fam`` with |D| <= depth.

    No singleton is forbidden, and each allowed D has fewer than
    gamma * n^ell one-step forbidden extensions.
    """
    if any(frozenset([f]) in gamma_family for f in fam):
        return False
    limit = gamma * fam.n ** ell
    seen = 0
    for size in range(depth + 1):
        for d in itertools.combinations(fam.members, size):
            seen += 1
            if seen > cap:
                raise CapExceeded(f"more than {cap} sets D to check (depth {depth}, |fam| = {len(fam)})")
            if frozenset(d) in gamma_family:
                continue
            if not len(gamma_family.frontier(d, fam)) < limit:
                return False
    return True


@dataclass(frozen=True)
class PartialEmbedding:
    poset: Poset
    ranks: RankFunction
    order: TreeOrder
    assigned: tuple = ()        # ((element, mask), ...) in placement order
    certificates: tuple = ()    # ((child, parent, chain rank, q-chain), ...)

    @property
    def step(self) -> int:
        return len(self.assigned)

    @property
    def images(self) -> dict[int, int]:
        return dict(self.assigned)

    def image_set(self) -> frozenset[int]:
        return frozenset(m for _, m in self.assigned)

    def extend(self, x: int, mask: int, cert) -> "PartialEmbedding":
        parent = self.order.parent[x]
        return PartialEmbedding(self.poset, self.ranks, self.order, self.assigned + ((x, mask),),
                                self.certificates + ((x, parent) + tuple(cert),))


@dataclass(frozen=True)
class Embedding:
    masks: tuple[int, ...]      # masks[x] is the image of element x
    certificates: tuple

    def image(self) -> frozenset[int]:
        return frozenset(self.masks)

    def to_json(self) -> dict:
        return {
            "map": {str(x): m for x, m in enumerate(self.masks)},
            "certificates": [
                {"child": c, "parent": p, "chain": rank, "q_chain": list(qc)}
                for c, p, rank, qc in self.certificates
            ],
        }


def _candidates(phi: PartialEmbedding, x: int, M: QMarkedView) -> dict[int, tuple]:
    p, r = phi.poset, phi.ranks
    y = phi.order.parent[x]
    images = phi.images
    fy = images[y]
    found = M.partners(fy, r(y), r(x))
    if p.lt(x, y):
        others = [m for z, m in phi.assigned if z != y and not p.lt(y, z)]
        near = forbidden_down(fy, Family(M.n, tuple(others)))
    elif p.lt(y, x):
        others = [m for z, m in phi.assigned if z != y and not p.lt(z, y)]
        near = forbidden_up(fy, Family(M.n, tuple(others)))
    else:
        raise ValueError(f"parent {y} of {x} is not comparable to it")
    taken = set(images.values())
    return {g: c for g, c in found.items() if g not in near and g not in taken}


def candidate_set(phi: PartialEmbedding, x: int, M: QMarkedView) -> Family:
    """Masks eligible as the image of x given its placed parent."""
    return Family(M.n, tuple(_candidates(phi, x, M)))


def _extends_induced(phi: PartialEmbedding, x: int, mask: int) -> bool:
    p = phi.poset
    for z, m in phi.assigned:
        if (mask & ~m == 0) != p.lt(x, z) or (m & ~mask == 0) != p.lt(z, x):
            return False
    return True


def embed_enumerate(fam: Family, P: Poset, r: RankFunction, gamma_family: BoundedForbidden,
                    nested: list[QMarkedView], root: int, F0: int) -> Iterator[Embedding]:
    """Every complete embedding reachable from ``root -> F0`` in the search tree.

    ``nested[k]`` is the k-th cleaned family, so ``nested[-1]`` is the
    smallest. Extensions whose image would fall in ``gamma_family`` or fail
    to be induced are skipped; each yielded map is audited before release.
    """
    if not is_tree_poset(P):
        raise ValueError(f"{P!r} is not a tree poset")
    if len(nested) != P.size + 1:
        raise ValueError(f"nested list has length {len(nested)}, expected |P| + 1 = {P.size + 1}")
    qs = {m.q for m in nested}
    if len(qs) != 1 or r.q not in qs:
        raise ValueError("nested views and rank function disagree on q")
    if not r.is_valid_for(P):
        raise ValueError("rank function is not order-reversing on P")
    if F0 not in nested[-1].level_set(r(root)):
        raise ValueError(f"F0={F0:#x} is not at position {r(root)} of any q-chain of the last family")
    if F0 not in fam or frozenset([F0]) in gamma_family:
        return
    order = tree_order(P, root)
    start = PartialEmbedding(P, r, order, ((root, F0),))
    members = fam.as_set
    size = P.size

    def rec(phi: PartialEmbedding) -> Iterator[Embedding]:
        j = phi.step
        if j == size:
            masks = [0] * size
            for z, m in phi.assigned:
                masks[z] = m
            if not is_induced_copy(masks, P) or frozenset(masks) in gamma_family:
                raise AssertionError("embedding audit failed")
            yield Embedding(tuple(masks), phi.certificates)
            return
        x = order.order[j]
        M = nested[size - j - 1]
        cands = _candidates(phi, x, M)
        image = phi.image_set()
        for g in sorted(cands):
            if g not in members:
                continue
            if (image | {g}) in gamma_family:
                continue
            if not _extends_induced(phi, x, g):
                continue
            yield from rec(phi.extend(x, g, cands[g]))

    yield from rec(start)


@dataclass
class CensusEntry:
    root: int
    ranks: tuple[int, ...]
    roots_tried: int
    embeddings: int
    images: int


@dataclass
class Census:
    entries: list = field(default_factory=list)
    images: set = field(default_factory=set)

    @property
    def total(self) -> int:
        return sum(e.embeddings for e in self.entries)

    @property
    def best(self) -> int:
        return max((e.embeddings for e in self.entries), default=0)

    def per_rank(self) -> dict[tuple[int, ...], int]:
        out: dict[tuple[int, ...], int] = {}
        for e in self.entries:
            out[e.ranks] = max(out.get(e.ranks, 0), e.embeddings)
        return out

    def to_json(self) -> dict:
        return {
            "entries": [e.__dict__ for e in self.entries],
            "total_embeddings": self.total,
            "best_embeddings": self.best,
            "distinct_images": len(self.images),
        }


def embedding_census(fam: Family, P: Poset, nested: list[QMarkedView],
                     gamma_family: BoundedForbidden | None = None,
                     roots: Iterable[int] | None = None,
                     sink: Callable[[Embedding], None] | None = None) -> Census:
    """Run the embedder for every root, rank function and starting image."""
    gamma_family = gamma_family or BoundedForbidden.empty()
    q = nested[0].q
    census = Census()
    for root in (range(P.size) if roots is None else roots):
        for r in rank_functions(P, q):
            starts = nested[-1].level_set(r(root))
            count = 0
            images: set = set()
            for f0 in starts:
                for emb in embed_enumerate(fam, P, r, gamma_family, nested, root, f0):
                    count += 1
                    images.add(emb.image())
                    if sink is not None:
                        sink(emb)
            census.entries.append(CensusEntry(root, r.ranks, len(starts), count, len(images)))
            census.images |= images
    return census


def dump_embeddings(embeddings: Iterable[Embedding], fh) -> int:
    """Write one JSON object per line; returns the number written."""
    k = 0
    for emb in embeddings:
        fh.write(json.dumps(emb.to_json(), sort_keys=True) + "\n")
        k += 1
    return k
