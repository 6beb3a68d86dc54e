"""Bit-level representation of the Boolean lattice B_n.

A member of B_n is a plain ``int`` whose low ``n`` bits encode the set:
ground element ``e`` (1-based, as in ``{1,3,4}``) lives in bit ``e - 1``.
Families are immutable, sorted, deduplicated collections of such masks.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator

MAX_N = 24


class CapExceeded(RuntimeError):
    """A desk-scale size cap was hit; the computation was not attempted."""


def popcount(mask: int) -> int:
    return mask.bit_count()


def subset_mask(elements: Iterable[int]) -> int:
    """Mask of a set of 1-based ground elements."""
    m = 0
    for e in elements:
        if e < 1:
            raise ValueError(f"ground elements are 1-based, got {e}")
        m |= 1 << (e - 1)
    return m


def elements(mask: int) -> tuple[int, ...]:
    out = []
    e = 1
    while mask:
        if mask & 1:
            out.append(e)
        mask >>= 1
        e += 1
    return tuple(out)


def full_mask(n: int) -> int:
    return (1 << n) - 1


def complement(mask: int, n: int) -> int:
    return full_mask(n) & ~mask


def submasks(mask: int) -> Iterator[int]:
    """All submasks of ``mask``, largest first, ending with 0."""
    s = mask
    while True:
        yield s
        if s == 0:
            return
        s = (s - 1) & mask


def supermasks(mask: int, n: int) -> Iterator[int]:
    comp = complement(mask, n)
    for s in submasks(comp):
        yield mask | s


def check_mask(mask: int, n: int) -> None:
    if mask < 0 or mask >> n:
        raise ValueError(f"mask {mask:#x} is not a subset of [{n}]")


def format_set(mask: int) -> str:
    if mask == 0:
        return "empty"
    return "{" + ",".join(str(e) for e in elements(mask)) + "}"


class Relation(enum.Enum):
    EQUAL = "equal"
    SUBSET = "subset"
    SUPERSET = "superset"
    INCOMPARABLE = "incomparable"


def compare(a: int, b: int) -> Relation:
    if a == b:
        return Relation.EQUAL
    if a & ~b == 0:
        return Relation.SUBSET
    if b & ~a == 0:
        return Relation.SUPERSET
    return Relation.INCOMPARABLE


def comparable(a: int, b: int) -> bool:
    return a & ~b == 0 or b & ~a == 0


@dataclass(frozen=True)
class Family:
    """A set of members of B_n, stored sorted by mask value."""

    n: int
    members: tuple[int, ...]

    def __post_init__(self):
        if not 0 <= self.n <= MAX_N:
            raise ValueError(f"n={self.n} outside supported range 0..{MAX_N}")
        ms = tuple(sorted(set(self.members)))
        for m in ms:
            check_mask(m, self.n)
        object.__setattr__(self, "members", ms)

    @classmethod
    def of(cls, n: int, members: Iterable[int] = ()) -> "Family":
        return cls(n, tuple(members))

    @classmethod
    def from_sets(cls, n: int, sets: Iterable[Iterable[int]]) -> "Family":
        return cls(n, tuple(subset_mask(s) for s in sets))

    @classmethod
    def full(cls, n: int) -> "Family":
        return cls(n, tuple(range(1 << n)))

    @classmethod
    def level(cls, n: int, k: int) -> "Family":
        return cls.levels(n, [k])

    @classmethod
    def levels(cls, n: int, ks: Iterable[int]) -> "Family":
        wanted = set(ks)
        return cls(n, tuple(m for m in range(1 << n) if popcount(m) in wanted))

    @cached_property
    def as_set(self) -> frozenset[int]:
        return frozenset(self.members)

    @cached_property
    def level_counts(self) -> tuple[int, ...]:
        counts = [0] * (self.n + 1)
        for m in self.members:
            counts[popcount(m)] += 1
        return tuple(counts)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[int]:
        return iter(self.members)

    def __contains__(self, mask: object) -> bool:
        return mask in self.as_set

    def union(self, other: "Family") -> "Family":
        _same_n(self, other)
        return Family(self.n, self.members + other.members)

    def difference(self, other: Iterable[int]) -> "Family":
        drop = set(other)
        return Family(self.n, tuple(m for m in self.members if m not in drop))

    def issubset(self, other: "Family") -> bool:
        return self.as_set <= other.as_set

    def __repr__(self) -> str:
        shown = ", ".join(format_set(m) for m in self.members[:8])
        more = ", ..." if len(self) > 8 else ""
        return f"Family(n={self.n}, [{shown}{more}])"


def _same_n(a: Family, b: Family) -> None:
    if a.n != b.n:
        raise ValueError(f"ground sizes differ: {a.n} vs {b.n}")


@dataclass(frozen=True)
class LevelWindow:
    lo: int
    hi: int

    def __post_init__(self):
        if not 0 <= self.lo <= self.hi:
            raise ValueError(f"bad level window [{self.lo}, {self.hi}]")

    def __contains__(self, k: object) -> bool:
        return isinstance(k, int) and self.lo <= k <= self.hi

    def family(self, n: int) -> Family:
        if self.hi > n:
            raise ValueError(f"window [{self.lo}, {self.hi}] exceeds n={n}")
        return Family.levels(n, range(self.lo, self.hi + 1))


def lubell_weight(fam: Family) -> Fraction:
    """Sum of 1/binom(n, |F|) over the family, as an exact rational."""
    binoms = [math.comb(fam.n, k) for k in range(fam.n + 1)]
    return sum((Fraction(c, binoms[k]) for k, c in enumerate(fam.level_counts) if c), Fraction(0))


def tilde_radius(n: int) -> float:
    if n <= 0:
        raise ValueError("the central slab is undefined for n = 0")
    return 2.0 * math.sqrt(n * math.log(n))


def is_in_tilde(mask: int, n: int) -> bool:
    """Membership in the central slab: ||F| - n/2| < 2 sqrt(n ln n), strictly."""
    r = tilde_radius(n)
    return abs(popcount(mask) - n / 2) < r


def down_set(fam: Family) -> frozenset[int]:
    out: set[int] = set()
    for m in fam:
        out.update(submasks(m))
    return frozenset(out)


def up_set(fam: Family) -> frozenset[int]:
    out: set[int] = set()
    for m in fam:
        out.update(supermasks(m, fam.n))
    return frozenset(out)


def comp_closure(fam: Family) -> Family:
    """Every member of B_n comparable to some member of ``fam`` (``fam`` included)."""
    return Family(fam.n, tuple(down_set(fam) | up_set(fam)))


def _forbidden(anchor: int, s: Family, side: str) -> Family:
    n = s.n
    check_mask(anchor, n)
    for g in s:
        if side == "down" and anchor & ~g == 0:
            raise ValueError(f"forbidden_down needs S disjoint from U(F); {format_set(g)} contains F")
        if side == "up" and g & ~anchor == 0:
            raise ValueError(f"forbidden_up needs S disjoint from D(F); {format_set(g)} lies in F")
    if not len(s):
        return Family(n, ())
    span = submasks(anchor) if side == "down" else supermasks(anchor, n)
    out = [
        d
        for d in span
        if d != anchor and is_in_tilde(d, n) and any(comparable(d, g) for g in s)
    ]
    return Family(n, tuple(out))


def forbidden_down(anchor: int, s: Family) -> Family:
    """(D(F) minus F) intersected with Comp(S) and the central slab."""
    return _forbidden(anchor, s, "down")


def forbidden_up(anchor: int, s: Family) -> Family:
    return _forbidden(anchor, s, "up")


def is_l_gapped(fam: Family, ell: int) -> bool:
    if ell < 1:
        raise ValueError("ell must be at least 1")
    ms = sorted(fam.members, key=popcount)
    for idx, f in enumerate(ms):
        pf = popcount(f)
        for g in ms[idx + 1:]:
            if g != f and f & ~g == 0 and popcount(g) - pf < ell:
                return False
    return True


def middle_levels(n: int, q: int) -> LevelWindow:
    """The q middle levels; on parity ties the window is rounded upward."""
    if not 1 <= q <= n + 1:
        raise ValueError(f"q={q} must lie in 1..{n + 1}")
    lo = -(-(n - q + 1) // 2)
    return LevelWindow(lo, lo + q - 1)


# --- text format -----------------------------------------------------------

def parse_family(text: str) -> Family:
    """Parse the family text format (header ``n=<int>``, one set per line)."""
    n = None
    masks: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if n is None:
            if not line.startswith("n="):
                raise ValueError(f"line {lineno}: expected header 'n=<int>', got {line!r}")
            try:
                n = int(line[2:])
            except ValueError:
                raise ValueError(f"line {lineno}: bad ground set size {line!r}")
            if not 0 <= n <= MAX_N:
                raise ValueError(f"line {lineno}: n={n} outside [0, {MAX_N}]")
            continue
        try:
            if line == "empty":
                m = 0
            elif line.lower().startswith("0x"):
                m = int(line, 16)
            elif line.startswith("{") and line.endswith("}"):
                body = line[1:-1].strip()
                m = subset_mask(int(t) for t in body.split(",")) if body else 0
            else:
                raise ValueError("unrecognised set syntax")
        except ValueError as exc:
            raise ValueError(f"line {lineno}: cannot parse set {line!r}: {exc}")
        if m >> n:
            raise ValueError(f"line {lineno}: set {format_set(m)} is not inside [{n}]")
        masks.append(m)
    if n is None:
        raise ValueError("missing header 'n=<int>'")
    return Family(n, tuple(masks))


def format_family(fam: Family, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines.extend(f"# {c}" for c in comment.splitlines())
    lines.append(f"n={fam.n}")
    lines.extend(format_set(m) for m in fam)
    return "\n".join(lines) + "\n"


def read_family(path) -> Family:
    with open(path) as fh:
        return parse_family(fh.read())


def write_family(path, fam: Family, comment: str | None = None) -> None:
    with open(path, "w") as fh:
        fh.write(format_family(fam, comment))
