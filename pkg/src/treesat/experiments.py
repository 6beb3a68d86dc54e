"""Random Turan trials, exact La* by branch and bound, and P-free counting.

Sampling uses numpy's Philox counter-based generator: the 128-bit key is
``seed + (stream << 64)`` and mask m is kept iff the m-th raw 64-bit draw
is below ``floor(p * 2^64)``. The same (n, p, seed, stream) always yields
the same family on any platform.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .lattice import CapExceeded, Family, popcount
from .posets import Poset, height
from .supersat import enumerate_copies

PRNG_NAME = "philox4x64-numpy/1"
NODE_CAP = 2_000_000
HOST_CAP = 128


def _fraction(p) -> Fraction:
    p = p if isinstance(p, Fraction) else Fraction(p)
    if not 0 <= p <= 1:
        raise ValueError(f"p={p} outside [0, 1]")
    return p


def sample_plattice(n: int, p, seed: int, stream: int = 0) -> Family:
    """Keep each member of B_n independently with probability p."""
    p = _fraction(p)
    if seed < 0 or stream < 0 or seed >> 64:
        raise ValueError("seed must be in [0, 2^64) and stream nonnegative")
    size = 1 << n
    if p == 0:
        return Family(n, ())
    if p == 1:
        return Family(n, tuple(range(size)))
    gen = np.random.Philox(key=seed + (stream << 64))
    raw = gen.random_raw(size)
    threshold = np.uint64((p.numerator << 64) // p.denominator)
    keep = np.nonzero(raw < threshold)[0]
    return Family(n, tuple(int(m) for m in keep))


def family_checksum(fam: Family) -> str:
    payload = f"n={fam.n};" + ",".join(str(m) for m in fam.members)
    return hashlib.sha256(payload.encode()).hexdigest()


# --- exact La* ---------------------------------------------------------------------

@lru_cache(maxsize=None)
def symmetric_chain_decomposition(n: int) -> tuple[tuple[int, ...], ...]:
    """De Bruijn's symmetric chain decomposition of B_n, chains as mask tuples."""
    chains: list[tuple[int, ...]] = [(0,)]
    for e in range(n):
        bit = 1 << e
        nxt = []
        for c in chains:
            nxt.append(c + (c[-1] | bit,))
            if len(c) > 1:
                nxt.append(tuple(m | bit for m in c[:-1]))
        chains = nxt
    return tuple(chains)


@dataclass
class LaStarResult:
    value: int
    witness: Family
    exact: bool
    nodes: int
    copies: int


class _Solver:
    """Maximum independent set in the copy hypergraph, over host indices."""

    def __init__(self, host: Family, edges: list[int], node_cap: int):
        self.host = host
        self.k = len(host)
        self.edges = edges
        self.node_cap = node_cap
        self.nodes = 0
        self.aborted = False
        index = {m: i for i, m in enumerate(host.members)}
        self.vertex_edges = [[e for e in edges if e >> v & 1] for v in range(self.k)]
        self.blocks = []
        for chain in symmetric_chain_decomposition(host.n):
            b = 0
            for m in chain:
                if m in index:
                    b |= 1 << index[m]
            if b:
                self.blocks.append(b)
        self.block_edges = [[e for e in edges if e & b] for b in self.blocks]
        self.best = 0
        self.best_set = 0

    def greedy(self) -> int:
        """Peel the member lying in the most remaining copies, then add back what fits."""
        alive = (1 << self.k) - 1
        live = list(self.edges)
        while live:
            counts = [0] * self.k
            for e in live:
                t = e
                while t:
                    low = t & -t
                    counts[low.bit_length() - 1] += 1
                    t ^= low
            v = max(range(self.k), key=lambda i: (counts[i], -i))
            alive &= ~(1 << v)
            live = [e for e in live if not e >> v & 1]
        for v in range(self.k):
            if not alive >> v & 1:
                cand = alive | 1 << v
                if all(e & ~cand for e in self.vertex_edges[v]):
                    alive = cand
        return alive

    def _block_alpha(self, bi: int, inside: int, free: int) -> int:
        b = self.blocks[bi] & free
        if not b:
            return 0
        relevant = [e for e in self.block_edges[bi] if e & ~(inside | b) == 0]
        if not relevant:
            return popcount(b)
        best = 0
        s = b
        while True:
            size = popcount(s)
            if size > best:
                cand = inside | s
                if all(e & ~cand for e in relevant):
                    best = size
                    if best == popcount(b):
                        break
            if s == 0:
                break
            s = (s - 1) & b
        return best

    def upper_bound(self, inside: int, free: int) -> int:
        by_blocks = sum(self._block_alpha(bi, inside, free) for bi in range(len(self.blocks)))
        used = 0
        packed = 0
        for e in self.edges:
            part = e & free
            if e & ~(inside | free):
                continue
            if part and not part & used:
                used |= part
                packed += 1
        return popcount(inside) + min(by_blocks, popcount(free) - packed)

    def propagate(self, inside: int, free: int) -> tuple[int, bool]:
        """Force out any free vertex that would complete a copy; False if a copy is complete."""
        changed = True
        while changed:
            changed = False
            for e in self.edges:
                if e & ~(inside | free):
                    continue
                rest = e & ~inside
                if rest == 0:
                    return free, False
                if rest & (rest - 1) == 0:
                    free &= ~rest
                    changed = True
        return free, True

    def search(self, inside: int, free: int) -> None:
        if self.aborted:
            return
        self.nodes += 1
        if self.nodes > self.node_cap:
            self.aborted = True
            return
        free, ok = self.propagate(inside, free)
        if not ok:
            return
        if popcount(inside) + popcount(free) <= self.best:
            return
        live = [e for e in self.edges if not e & ~(inside | free)]
        if not live:
            total = inside | free
            if popcount(total) > self.best:
                self.best, self.best_set = popcount(total), total
            return
        if self.upper_bound(inside, free) <= self.best:
            return
        counts: dict[int, int] = {}
        for e in live:
            t = e & free
            while t:
                low = t & -t
                counts[low] = counts.get(low, 0) + 1
                t ^= low
        bit = max(counts, key=lambda b: (counts[b], -b))
        self.search(inside, free & ~bit)
        self.search(inside | bit, free & ~bit)


def la_star_exact(host: Family, P: Poset, node_cap: int = NODE_CAP, host_cap: int = HOST_CAP) -> LaStarResult:
    """Largest induced-P-free subfamily of ``host``.

    Falls back to the greedy value with ``exact=False`` when the host or the
    search tree exceeds its cap.
    """
    if len(host) == 0:
        return LaStarResult(0, host, True, 0, 0)
    index = {m: i for i, m in enumerate(host.members)}
    copies = enumerate_copies(host, P, cap=max(host_cap, len(host)))
    edges = sorted({sum(1 << index[m] for m in c) for c in copies})
    solver = _Solver(host, edges, node_cap)
    seed = solver.greedy()
    solver.best, solver.best_set = popcount(seed), seed
    if len(host) > host_cap:
        solver.aborted = True
    else:
        solver.search(0, (1 << len(host)) - 1)
    chosen = solver.best_set
    witness = Family(host.n, tuple(m for i, m in enumerate(host.members) if chosen >> i & 1))
    return LaStarResult(solver.best, witness, not solver.aborted, solver.nodes, len(edges))


def kchain_sperner_value(n: int, k: int) -> int:
    """Sum of the k-1 largest binomial coefficients of n."""
    return sum(sorted((math.comb(n, j) for j in range(n + 1)), reverse=True)[: k - 1])


# --- random Turan trials -------------------------------------------------------------

@dataclass
class TrialRecord:
    seed: int
    trial: int
    n: int
    p: str
    sample_size: int
    la_star: int
    exact: bool
    millis: float
    prng: str = PRNG_NAME


@dataclass
class TuranStats:
    records: list
    n: int
    p: Fraction
    poset: str
    seed: int
    mean_exact: float | None
    max_exact: int | None
    greedy_trials: int
    reference: Fraction

    def summary(self) -> dict:
        return {
            "n": self.n,
            "p": str(self.p),
            "poset": self.poset,
            "seed": self.seed,
            "trials": len(self.records),
            "exact_trials": len(self.records) - self.greedy_trials,
            "greedy_trials": self.greedy_trials,
            "mean_la_star": self.mean_exact,
            "max_la_star": self.max_exact,
            "reference": str(self.reference),
            "reference_float": float(self.reference),
            "prng": PRNG_NAME,
        }


def _one_trial(args) -> TrialRecord:
    n, p, P, seed, trial, node_cap = args
    start = time.perf_counter()
    fam = sample_plattice(n, p, seed, trial)
    res = la_star_exact(fam, P, node_cap=node_cap)
    millis = (time.perf_counter() - start) * 1000
    return TrialRecord(seed, trial, n, str(p), len(fam), res.value, res.exact, millis)


def random_turan_trials(n: int, p, P: Poset, trials: int, seed: int, workers: int = 1,
                        node_cap: int = NODE_CAP) -> TuranStats:
    """Trial t samples with stream t of the master seed; results do not depend on ``workers``."""
    p = _fraction(p)
    jobs = [(n, p, P, seed, t, node_cap) for t in range(trials)]
    if workers > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_one_trial, jobs))
    else:
        records = [_one_trial(j) for j in jobs]
    exact = [r.la_star for r in records if r.exact]
    k = height(P)
    reference = (k - 1) * p * math.comb(n, n // 2)
    return TuranStats(
        records, n, p, P.name, seed,
        sum(exact) / len(exact) if exact else None,
        max(exact) if exact else None,
        sum(1 for r in records if not r.exact),
        reference,
    )


CSV_COLUMNS = ("seed", "n", "p", "sample_size", "la_star", "exact_flag", "millis")


def trials_csv(records: list, timing: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([r.seed, r.n, r.p, r.sample_size, r.la_star, str(r.exact).lower(),
                    f"{r.millis:.3f}" if timing else ""])
    return buf.getvalue()


def records_json(records: list) -> str:
    return json.dumps([asdict(r) for r in records], sort_keys=True)


# --- counting P-free families ---------------------------------------------------------

def _copy_edges(n: int, P: Poset) -> list[int]:
    """Copies of P in B_n as bitmasks over the 2^n members (member m is bit m)."""
    copies = enumerate_copies(Family.full(n), P)
    return sorted({sum(1 << m for m in c) for c in copies})


def enumerate_p_free(n: int, P: Poset, mode: str = "auto") -> int:
    """Number of induced-P-free subfamilies of B_n (the empty family included)."""
    if mode == "auto":
        mode = "exhaustive" if n <= 4 else "backtrack"
    if mode == "exhaustive":
        if n > 4:
            raise CapExceeded(f"exhaustive counting is capped at n <= 4, got n={n}")
        return _count_free_exhaustive(n, P)
    if mode == "backtrack":
        if n > 5:
            raise CapExceeded(f"backtracking counting is capped at n <= 5, got n={n}")
        return _count_free_backtrack(n, P)
    raise ValueError(f"unknown mode {mode!r}")


def _count_free_exhaustive(n: int, P: Poset) -> int:
    size = 1 << n
    fams = np.arange(1 << size, dtype=np.uint32)
    bad = np.zeros(fams.shape, dtype=bool)
    for e in _copy_edges(n, P):
        bad |= (fams & np.uint32(e)) == np.uint32(e)
    return int((~bad).sum())


def _count_free_backtrack(n: int, P: Poset) -> int:
    edges = _copy_edges(n, P)
    size = 1 << n
    by_vertex = [[e for e in edges if e >> v & 1] for v in range(size)]

    def rec(v: int, inside: int) -> int:
        # edges still completable lie within inside + {v, ..., size-1}
        upcoming = ((1 << size) - 1) & ~((1 << v) - 1)
        if not any(e & ~(inside | upcoming) == 0 and e & upcoming for e in edges):
            return 1 << (size - v)
        if v == size:
            return 1
        total = rec(v + 1, inside)
        cand = inside | 1 << v
        if all(e & ~cand for e in by_vertex[v] if e >> (v + 1) == 0):
            total += rec(v + 1, cand)
        return total

    return rec(0, 0)


def dedekind_number(n: int) -> int:
    """Antichains of B_n, via pairs f0 <= f1 of monotone functions on n-1 variables."""
    if n == 0:
        return 2
    funcs = [0, 1]  # monotone functions of 0 variables as truth tables
    for m in range(1, n):
        half = 1 << (m - 1)
        funcs = [f0 | (f1 << half) for f0 in funcs for f1 in funcs if f0 & ~f1 == 0]
    return sum(1 for f0 in funcs for f1 in funcs if f0 & ~f1 == 0)


# --- 2-chain supersaturation floor --------------------------------------------------------

def comparable_pairs(n: int) -> list[tuple[int, int]]:
    return [(a, b) for b in range(1 << n) for a in range(1 << n) if a != b and a & ~b == 0]


def two_chain_minima(n: int) -> list[int]:
    """Minimum number of comparable pairs over all families of each size a = 0..2^n."""
    if n > 4:
        raise CapExceeded(f"exhaustive 2-chain minima are capped at n <= 4, got n={n}")
    size = 1 << n
    fams = np.arange(1 << size, dtype=np.uint32)
    count = np.zeros(fams.shape, dtype=np.int32)
    for a, b in comparable_pairs(n):
        count += ((fams >> np.uint32(a)) & (fams >> np.uint32(b)) & np.uint32(1)).astype(np.int32)
    sizes = np.zeros(fams.shape, dtype=np.int32)
    for m in range(size):
        sizes += ((fams >> np.uint32(m)) & np.uint32(1)).astype(np.int32)
    out = []
    for a in range(size + 1):
        out.append(int(count[sizes == a].min()))
    return out


def centralized_family(n: int, a: int) -> Family:
    """``a`` sets with sizes as close to n/2 + 1/4 as possible; partial level filled in mask order."""
    if not 0 <= a <= 1 << n:
        raise ValueError(f"size {a} outside 0..{1 << n}")
    centre = Fraction(n, 2) + Fraction(1, 4)
    levels = sorted(range(n + 1), key=lambda k: abs(k - centre))
    chosen: list[int] = []
    for k in levels:
        level = [m for m in range(1 << n) if popcount(m) == k]
        take = min(len(level), a - len(chosen))
        chosen.extend(level[:take])
        if len(chosen) == a:
            break
    return Family(n, tuple(chosen))


def two_chain_count(fam: Family) -> int:
    ms = fam.members
    return sum(1 for a in ms for b in ms if a != b and a & ~b == 0)
