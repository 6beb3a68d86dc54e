"""Finite posets, Hasse diagrams, tree orders and rank functions.

Elements are labelled ``0..size-1``. The strict order is kept as two lists
of bitmasks over the labels, ``below[y]`` (all x with x < y) and
``above[x]``, which keeps relation tests to a single AND.
"""
from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .lattice import Family


class PosetError(ValueError):
    pass


@dataclass(frozen=True)
class HasseDiagram:
    size: int
    covers: tuple[tuple[int, int], ...]  # (x, y): y covers x

    def undirected_neighbors(self) -> list[list[int]]:
        nbrs: list[list[int]] = [[] for _ in range(self.size)]
        for x, y in self.covers:
            nbrs[x].append(y)
            nbrs[y].append(x)
        for lst in nbrs:
            lst.sort()
        return nbrs


class Poset:
    """A finite strict partial order on ``0..size-1``.

    ``relations`` must already be transitive; use :meth:`from_covers` to
    close a cover list.
    """

    def __init__(self, size: int, relations: Iterable[tuple[int, int]], name: str = ""):
        if size < 0:
            raise PosetError("size must be non-negative")
        below = [0] * size
        pairs = set()
        for x, y in relations:
            if not (0 <= x < size and 0 <= y < size):
                raise PosetError(f"relation ({x}, {y}) uses a label outside 0..{size - 1}")
            if x == y:
                raise PosetError(f"relation is not irreflexive at {x}")
            pairs.add((x, y))
            below[y] |= 1 << x
        for x, y in pairs:
            if (y, x) in pairs:
                raise PosetError(f"relation is not antisymmetric: {x} < {y} < {x}")
        for x, y in pairs:
            # x < y and w < x must give w < y
            if below[x] & ~below[y]:
                raise PosetError(f"relation is not transitive through {x} < {y}")
        self.size = size
        self.name = name
        self.below = tuple(below)
        above = [0] * size
        for x, y in pairs:
            above[x] |= 1 << y
        self.above = tuple(above)

    @classmethod
    def from_covers(cls, size: int, covers: Iterable[tuple[int, int]], name: str = "") -> "Poset":
        covers = list(covers)
        below = [0] * size
        for x, y in covers:
            if not (0 <= x < size and 0 <= y < size) or x == y:
                raise PosetError(f"bad cover ({x}, {y})")
            below[y] |= 1 << x
        changed = True
        while changed:
            changed = False
            for y in range(size):
                acc = below[y]
                b = below[y]
                while b:
                    x = (b & -b).bit_length() - 1
                    b &= b - 1
                    acc |= below[x]
                if acc != below[y]:
                    if acc >> y & 1:
                        raise PosetError(f"cover list has a cycle through {y}")
                    below[y] = acc
                    changed = True
        rel = [(x, y) for y in range(size) for x in range(size) if below[y] >> x & 1]
        return cls(size, rel, name)

    def lt(self, x: int, y: int) -> bool:
        return bool(self.below[y] >> x & 1)

    def comparable(self, x: int, y: int) -> bool:
        return x == y or self.lt(x, y) or self.lt(y, x)

    def relations(self) -> list[tuple[int, int]]:
        return [(x, y) for y in range(self.size) for x in range(self.size) if self.lt(x, y)]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Poset) and self.size == other.size and self.below == other.below

    def __hash__(self) -> int:
        return hash((self.size, self.below))

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"Poset{label}(size={self.size}, covers={list(hasse(self).covers)})"

    @cached_property
    def hasse(self) -> HasseDiagram:
        return hasse(self)

    @cached_property
    def automorphism_count(self) -> int:
        return count_automorphisms(self)


def hasse(p: Poset) -> HasseDiagram:
    covers = []
    for y in range(p.size):
        b = p.below[y]
        for x in range(p.size):
            if b >> x & 1:
                # x is covered by y iff nothing in below[y] sits above x
                if not (p.above[x] & b):
                    covers.append((x, y))
    covers.sort()
    return HasseDiagram(p.size, tuple(covers))


def height(p: Poset) -> int:
    if p.size == 0:
        raise PosetError("empty poset")
    memo: dict[int, int] = {}

    def longest_up(x: int) -> int:
        if x not in memo:
            best = 0
            a = p.above[x]
            for y in range(p.size):
                if a >> y & 1:
                    best = max(best, longest_up(y))
            memo[x] = best + 1
        return memo[x]

    return max(longest_up(x) for x in range(p.size))


def is_tree_poset(p: Poset) -> bool:
    if p.size == 0:
        raise PosetError("empty poset")
    h = p.hasse
    if len(h.covers) != p.size - 1:
        return False
    nbrs = h.undirected_neighbors()
    seen = {0}
    todo = [0]
    while todo:
        x = todo.pop()
        for y in nbrs[x]:
            if y not in seen:
                seen.add(y)
                todo.append(y)
    return len(seen) == p.size


@dataclass(frozen=True)
class TreeOrder:
    order: tuple[int, ...]
    parent: dict  # element -> parent element, root absent

    @property
    def root(self) -> int:
        return self.order[0]


def tree_order(p: Poset, root: int) -> TreeOrder:
    """BFS order of the Hasse tree from ``root``, lowest label first."""
    if not is_tree_poset(p):
        raise PosetError(f"{p!r} is not a tree poset")
    if not 0 <= root < p.size:
        raise PosetError(f"root {root} not in poset")
    nbrs = p.hasse.undirected_neighbors()
    order = [root]
    parent: dict[int, int] = {}
    seen = {root}
    queue = deque([root])
    while queue:
        x = queue.popleft()
        for y in nbrs[x]:
            if y not in seen:
                seen.add(y)
                parent[y] = x
                order.append(y)
                queue.append(y)
    return TreeOrder(tuple(order), parent)


@dataclass(frozen=True)
class RankFunction:
    """Order-reversing map into [q]; position 1 is the largest set."""

    ranks: tuple[int, ...]
    q: int

    def __call__(self, x: int) -> int:
        return self.ranks[x]

    def is_valid_for(self, p: Poset) -> bool:
        if len(self.ranks) != p.size or any(not 1 <= r <= self.q for r in self.ranks):
            return False
        return all(self.ranks[x] > self.ranks[y] for x, y in p.relations())


def rank_functions(p: Poset, q: int) -> list[RankFunction]:
    """All order-reversing maps P -> [q], lexicographic by element label."""
    out: list[RankFunction] = []
    ranks = [0] * p.size

    def rec(x: int) -> None:
        if x == p.size:
            out.append(RankFunction(tuple(ranks), q))
            return
        for r in range(1, q + 1):
            ok = True
            for w in range(x):
                if p.lt(w, x) and not ranks[w] > r:
                    ok = False
                    break
                if p.lt(x, w) and not r > ranks[w]:
                    ok = False
                    break
            if ok:
                ranks[x] = r
                rec(x + 1)

    if q >= 1 and p.size:
        rec(0)
    return out


def is_induced_copy(masks: Sequence[int], p: Poset) -> bool:
    """True iff x_i -> masks[i] is an injective induced homomorphism."""
    if len(masks) != p.size:
        raise ValueError(f"need {p.size} masks, got {len(masks)}")
    if len(set(masks)) != len(masks):
        raise ValueError("masks must be distinct")
    for i, a in enumerate(masks):
        for j, b in enumerate(masks):
            if i != j and (a & ~b == 0) != p.lt(i, j):
                return False
    return True


def induced_poset_of(fam: Family | Sequence[int]) -> Poset:
    masks = list(fam)
    if not masks:
        raise PosetError("family is empty")
    rel = [
        (i, j)
        for i, a in enumerate(masks)
        for j, b in enumerate(masks)
        if i != j and a & ~b == 0
    ]
    return Poset(len(masks), rel)


def count_automorphisms(p: Poset) -> int:
    """Number of order automorphisms, by backtracking."""
    n = p.size
    img = [-1] * n
    used = [False] * n

    def rec(x: int) -> int:
        if x == n:
            return 1
        total = 0
        for c in range(n):
            if used[c]:
                continue
            ok = True
            for w in range(x):
                if p.lt(w, x) != p.lt(img[w], c) or p.lt(x, w) != p.lt(c, img[w]):
                    ok = False
                    break
            if ok:
                used[c] = True
                img[x] = c
                total += rec(x + 1)
                used[c] = False
        return total

    return rec(0)


def are_isomorphic(p: Poset, r: Poset) -> bool:
    if p.size != r.size or sorted(map(int.bit_count, p.below)) != sorted(map(int.bit_count, r.below)):
        return False
    n = p.size
    img = [-1] * n
    used = [False] * n

    def rec(x: int) -> bool:
        if x == n:
            return True
        for c in range(n):
            if used[c]:
                continue
            if all(p.lt(w, x) == r.lt(img[w], c) and p.lt(x, w) == r.lt(c, img[w]) for w in range(x)):
                used[c] = True
                img[x] = c
                if rec(x + 1):
                    return True
                used[c] = False
        return False

    return rec(0)


# --- named posets ------------------------------------------------------------

def chain(k: int) -> Poset:
    return Poset.from_covers(k, [(i, i + 1) for i in range(k - 1)], name=f"chain{k}")


def antichain(m: int) -> Poset:
    return Poset(m, [], name=f"antichain{m}")


def v_poset() -> Poset:
    """a < b, a < c with a = 0."""
    return Poset.from_covers(3, [(0, 1), (0, 2)], name="V")


def lambda_poset() -> Poset:
    """b < a, c < a with a = 0."""
    return Poset.from_covers(3, [(1, 0), (2, 0)], name="Lambda")


def zigzag(k: int) -> Poset:
    """Path poset on k elements with alternating covers 0 < 1 > 2 < 3 ..."""
    covers = [(i, i + 1) if i % 2 == 0 else (i + 1, i) for i in range(k - 1)]
    return Poset.from_covers(k, covers, name=f"zigzag{k}")


def spider(legs: int) -> Poset:
    """Centre 0 below ``legs`` pairwise incomparable tops."""
    return Poset.from_covers(legs + 1, [(0, i) for i in range(1, legs + 1)], name=f"spider{legs + 1}")


def diamond() -> Poset:
    return Poset.from_covers(4, [(0, 1), (0, 2), (1, 3), (2, 3)], name="diamond")


BUILTIN = {
    "chain1": lambda: chain(1),
    "chain2": lambda: chain(2),
    "chain3": lambda: chain(3),
    "chain4": lambda: chain(4),
    "V": v_poset,
    "Lambda": lambda_poset,
    "zigzag3": lambda: zigzag(3),
    "zigzag4": lambda: zigzag(4),
    "spider4": lambda: spider(3),
}


def suite() -> list[Poset]:
    """Tree posets used throughout the checks: chains k<=3, V, Lambda, both zigzags, the claw."""
    return [chain(1), chain(2), chain(3), v_poset(), lambda_poset(), zigzag(3), zigzag(4), spider(3)]


# --- file format ---------------------------------------------------------------

def parse_poset(text: str) -> Poset:
    name = ""
    size = None
    covers = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        if tok[0] == "poset":
            for t in tok[1:]:
                if t.startswith("size="):
                    size = int(t[5:])
                else:
                    name = t
        elif tok[0] == "cover" and len(tok) == 3:
            covers.append((int(tok[1]), int(tok[2])))
        else:
            raise PosetError(f"line {lineno}: cannot parse {line!r}")
    if size is None:
        raise PosetError("missing header 'poset <name> size=<k>'")
    return Poset.from_covers(size, covers, name=name)


def format_poset(p: Poset) -> str:
    lines = [f"poset {p.name or 'P'} size={p.size}"]
    lines.extend(f"cover {x} {y}" for x, y in p.hasse.covers)
    return "\n".join(lines) + "\n"


def read_poset(path) -> Poset:
    with open(path) as fh:
        return parse_poset(fh.read())


def load_poset(source: str) -> Poset:
    """A poset file path, or a builtin name such as ``chain2`` or ``V``."""
    if os.path.exists(source):
        return read_poset(source)
    stem = os.path.splitext(os.path.basename(source))[0]
    if stem in BUILTIN:
        return BUILTIN[stem]()
    raise PosetError(f"no poset file or builtin named {source!r} (builtins: {', '.join(BUILTIN)})")


__all__ = [
    "HasseDiagram", "Poset", "PosetError", "RankFunction", "TreeOrder",
    "antichain", "are_isomorphic", "chain", "count_automorphisms",
    "diamond", "format_poset", "hasse", "height", "induced_poset_of",
    "is_induced_copy", "is_tree_poset", "lambda_poset", "load_poset",
    "parse_poset", "rank_functions", "read_poset", "spider", "suite",
    "tree_order", "tree_orders", "v_poset", "zigzag",
]


tree_orders = tree_order

