"""Badness deciders, witnesses and the iterative cleaning process.

A marker F is (i, delta)-lower bad for a q-marked family M when M(F, i) is
nonempty and some family W of subsets of F meets every q-chain of M(F, i)
while a uniform full chain through F meets W with probability at most
delta. Upper badness is the mirror image. A witness only ever needs members
of those q-chains on the relevant side of F, plus F itself, so the search is
a minimum-measure hitting set problem over a small pool.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .chains import (
    CHAIN_CAP,
    MarkedChainFamily,
    QMarkedView,
    build_strong_T,
    chain_hit_count,
    hit_probability_sparse,
    interval_chain_count,
)
from .lattice import CapExceeded, Family, forbidden_down, forbidden_up, popcount

POOL_CAP = 128
SIDES = ("lower", "upper")


class CleaningError(RuntimeError):
    """A retained chain lost q-strength during cleaning."""

    def __init__(self, message: str, rank: int | None = None):
        super().__init__(message)
        self.rank = rank


@dataclass(frozen=True)
class Witness:
    anchor: int
    i: int
    side: str
    members: Family
    measure: Fraction
    delta: Fraction

    def key(self) -> tuple:
        return (self.measure, len(self.members), self.members.members)

    def to_json(self) -> dict:
        return {
            "anchor": self.anchor,
            "i": self.i,
            "side": self.side,
            "members": list(self.members.members),
            "measure": str(self.measure),
        }


def _as_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def witness_constraints(mask: int, i: int, M: QMarkedView, side: str) -> tuple[list[int], list[frozenset[int]]]:
    """The pool and the sets every witness must meet.

    Each q-chain of M(F, i) is met by W exactly when W contains F or one of
    the chain's members on the given side of F. Supersets of other
    constraints are dropped since they are implied.
    """
    tails = M.tails(mask, i, side)
    cons = {frozenset(t) | {mask} for t in tails}
    minimal = [c for c in cons if not any(o < c for o in cons)]
    minimal.sort(key=lambda c: (len(c), sorted(c)))
    pool = sorted({m for c in minimal for m in c})
    return pool, minimal


def find_witness(mask: int, i: int, delta, M: QMarkedView, side: str = "lower",
                 pool_cap: int = POOL_CAP) -> Witness | None:
    """Minimum-measure (i, delta) witness for F on ``side``, or None.

    Ties on measure are broken by size, then by the sorted mask tuple.
    """
    if side not in SIDES:
        raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")
    delta = _as_fraction(delta)
    if not 0 <= delta <= 1:
        raise ValueError(f"delta={delta} outside [0, 1]")
    if delta == 0 or M.count_at(mask, i) == 0:
        return None
    pool, cons = witness_constraints(mask, i, M, side)
    if len(pool) > pool_cap:
        raise CapExceeded(f"witness pool of {len(pool)} members exceeds cap {pool_cap} (F={mask:#x}, i={i})")
    n = M.n
    idx = {m: k for k, m in enumerate(pool)}
    con_bits = [sum(1 << idx[m] for m in c) for c in cons]
    total = interval_chain_count(mask, side, n)
    # measures compare as integer hit counts over the same interval
    limit = delta * total
    single = [chain_hit_count(mask, [m], side, n) for m in pool]
    order_key = [(single[k], pool[k]) for k in range(len(pool))]

    best: list = [None]  # (hits, size, sorted masks)

    def better(cand) -> bool:
        return best[0] is None or cand < best[0]

    def recurse(chosen: int, members: list[int], hits: int, excluded: int) -> None:
        target = None
        width = None
        for c in con_bits:
            if c & chosen:
                continue
            w = popcount(c & ~excluded)
            if width is None or w < width:
                target, width = c, w
                if w == 0:
                    return
        if target is None:
            cand = (hits, len(members), tuple(sorted(members)))
            if better(cand):
                best[0] = cand
            return
        options = [k for k in range(len(pool)) if target >> k & 1 and not excluded >> k & 1]
        options.sort(key=order_key.__getitem__)
        for k in options:
            new_members = members + [pool[k]]
            new_hits = chain_hit_count(mask, new_members, side, n) if members else single[k]
            ok = new_hits <= limit
            if ok and best[0] is not None:
                bh, bs, _ = best[0]
                if new_hits > bh or (new_hits == bh and len(new_members) > bs):
                    ok = False
            if ok:
                recurse(chosen | 1 << k, new_members, new_hits, excluded)
            excluded |= 1 << k

    recurse(0, [], 0, 0)
    if best[0] is None:
        return None
    hits, _, members = best[0]
    return Witness(mask, i, side, Family(n, members), Fraction(hits, total), delta)


def is_bad(mask: int, i: int, delta, M: QMarkedView, side: str) -> bool:
    return find_witness(mask, i, delta, M, side) is not None


def is_delta_robust(mask: int, M: QMarkedView, delta) -> bool:
    """True iff F is neither lower- nor upper-bad at any position."""
    for i in range(1, M.q + 1):
        for side in SIDES:
            if find_witness(mask, i, delta, M, side) is not None:
                return False
    return True


def gamma_tail_deficit(mask: int, i: int, s: int, M: QMarkedView, w1: Family) -> Family:
    """The least W2 covering M(F, i) together with the forbidden neighbourhood of W1.

    For i < s, W2 collects the s-th member of every q-chain in M(F, i) that
    avoids D*(F, W1); for i > s the upper neighbourhood U*(F, W1) is used.
    Every valid W2 contains this one, so it is the unique minimum.
    """
    if i == s:
        raise ValueError("positions must differ")
    near = forbidden_down(mask, w1) if i < s else forbidden_up(mask, w1)
    blocked = near.as_set
    out = set()
    for _, qc in M.marked_at(mask, i):
        if not blocked.intersection(qc):
            out.add(qc[s - 1])
    return Family(M.n, tuple(out))


# --- asymptotic constants ---------------------------------------------------------

@dataclass(frozen=True)
class PaperConstants:
    eps: Fraction
    q: int
    poset_size: int
    Delta: int
    K: Fraction
    delta_max: Fraction
    log2_delta_max: float

    def to_json(self) -> dict:
        return {
            "eps": str(self.eps),
            "q": self.q,
            "poset_size": self.poset_size,
            "Delta": self.Delta,
            "K": str(self.K),
            "delta_max": str(self.delta_max),
            "log2_delta_max": self.log2_delta_max,
        }


def paper_constants(eps, q: int, P) -> PaperConstants:
    """Delta = 12|P|+q+2, K = Delta q^2 (Delta/(Delta-2))^|P| and the delta threshold.

    K is rarely an integer, so ``delta_max`` replaces 2^K by 2^ceil(K), which
    only makes it smaller; ``log2_delta_max`` is the real-valued log2 of the
    unrounded threshold.
    """
    eps = _as_fraction(eps)
    if not 0 < eps <= 1:
        raise ValueError(f"eps={eps} outside (0, 1]")
    if q < 1:
        raise ValueError("q must be positive")
    size = P if isinstance(P, int) else P.size
    if size < 1:
        raise ValueError("poset must be nonempty")
    Delta = 12 * size + q + 2
    K = Delta * q * q * Fraction(Delta, Delta - 2) ** size
    ck = math.ceil(K)
    first = Fraction(1, 2 ** (ck + 2)) / K
    second = eps / (18 * size * 2 ** (ck + 1) * K * q)
    kf = float(K)
    log_first = -(kf + 2) - math.log2(kf)
    log_second = math.log2(float(eps)) - math.log2(18 * size * q) - (kf + 1) - math.log2(kf)
    return PaperConstants(eps, q, size, Delta, K, min(first, second), min(log_first, log_second))


# --- cleaning process ------------------------------------------------------------

@dataclass
class StepLog:
    step: int
    removed_chains: list = field(default_factory=list)   # (rank, reason, markers dropped)
    removed_members: list = field(default_factory=list)  # (rank, mask)
    bad: dict = field(default_factory=dict)              # (mask, i, side) -> Witness
    searches: int = 0

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "searches": self.searches,
            "removed_chains": [{"rank": r, "reason": why, "markers": k} for r, why, k in self.removed_chains],
            "removed_members": [{"rank": r, "mask": m} for r, m in self.removed_members],
            "bad": [w.to_json() for _, w in sorted(self.bad.items())],
        }


@dataclass
class CleaningTrace:
    levels: list
    logs: list
    q: int
    delta: Fraction
    Delta: Fraction
    steps: int

    @property
    def final(self) -> MarkedChainFamily:
        return self.levels[-1]

    def views(self) -> list[QMarkedView]:
        return [QMarkedView(t, self.q) for t in self.levels]

    def sizes(self) -> list[int]:
        return [t.size for t in self.levels]

    def to_json(self) -> dict:
        return {
            "params": {"q": self.q, "delta": str(self.delta), "Delta": str(self.Delta), "steps": self.steps},
            "level_sizes": self.sizes(),
            "steps": [log.to_json() for log in self.logs],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def bad_members(M: QMarkedView, delta, side: str, log: StepLog | None = None) -> dict[int, set[int]]:
    """mask -> positions i at which the marker is (i, delta)-bad on ``side``."""
    out: dict[int, set[int]] = {}
    delta = _as_fraction(delta)
    if delta == 0:
        return out
    for mask in M.base.marker_set():
        for i in range(1, M.q + 1):
            if M.count_at(mask, i) == 0:
                continue
            if log is not None:
                log.searches += 1
            w = find_witness(mask, i, delta, M, side)
            if w is not None:
                out.setdefault(mask, set()).add(i)
                if log is not None:
                    log.bad[(mask, i, side)] = w
    return out


def clean_step(T: MarkedChainFamily, q: int, delta, Delta, step: int = 1) -> tuple[MarkedChainFamily, StepLog]:
    """One round: drop bad-heavy chains whole, drop bad markers elsewhere.

    A marker counts as bad on every chain carrying it once it is bad at any
    position, so every survivor is robust with respect to the input family.
    """
    delta = _as_fraction(delta)
    Delta = _as_fraction(Delta)
    M = QMarkedView(T, q)
    log = StepLog(step)
    lower = bad_members(M, delta, "lower", log)
    upper = bad_members(M, delta, "upper", log)
    kept: dict[int, tuple[int, ...]] = {}
    for rank, ms in T.markers.items():
        down = sum(1 for m in ms if m in lower)
        up = sum(1 for m in ms if m in upper)
        if down * Delta > len(ms) or up * Delta > len(ms):
            reason = "heavy-lower" if down * Delta > len(ms) else "heavy-upper"
            if down * Delta > len(ms) and up * Delta > len(ms):
                reason = "heavy-both"
            log.removed_chains.append((rank, reason, len(ms)))
            continue
        survivors = tuple(m for m in ms if m not in lower and m not in upper)
        for m in ms:
            if m in lower or m in upper:
                log.removed_members.append((rank, m))
        if 0 < len(survivors) < q:
            raise CleaningError(f"step {step}: chain {rank} kept {len(survivors)} < q={q} markers", rank)
        if survivors:
            kept[rank] = survivors
    return MarkedChainFamily(T.n, kept, q), log


def clean(T0: MarkedChainFamily, q: int, delta, Delta, steps: int) -> CleaningTrace:
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if not T0.is_q_strong(q):
        raise ValueError(f"input family is not {q}-strong")
    levels = [T0 if T0.q == q else MarkedChainFamily(T0.n, T0.markers, q)]
    logs = []
    for j in range(1, steps + 1):
        nxt, log = clean_step(levels[-1], q, delta, Delta, j)
        levels.append(nxt)
        logs.append(log)
    return CleaningTrace(levels, logs, q, _as_fraction(delta), _as_fraction(Delta), steps)


def default_Delta(q: int, poset_size: int) -> int:
    return 12 * poset_size + q + 2


@dataclass
class PipelineResult:
    views: list
    trace: CleaningTrace
    report: dict


def clean_pipeline(fam: Family, q: int, delta, steps: int, Delta=None,
                   cap: int = CHAIN_CAP) -> PipelineResult:
    """Build the strong family of ``fam``, clean it and wrap every level as T^j[q]."""
    if Delta is None:
        Delta = default_Delta(q, steps)
    T0 = build_strong_T(fam, q, cap)
    trace = clean(T0, q, delta, Delta, steps)
    views = trace.views()
    report = {
        "n": fam.n,
        "family_size": len(fam),
        "q": q,
        "delta": str(_as_fraction(delta)),
        "Delta": str(_as_fraction(Delta)),
        "steps": steps,
        "T_sizes": trace.sizes(),
        "level_set_sizes": [[len(v.level_set(i)) for i in range(1, q + 1)] for v in views],
    }
    return PipelineResult(views, trace, report)


# --- audits ----------------------------------------------------------------------

def audit_trace(trace: CleaningTrace, check_robust: bool = True) -> list[str]:
    """Re-derive the trace invariants; returns a list of violations (empty when sound)."""
    problems = []
    q = trace.q
    for j, t in enumerate(trace.levels):
        if not t.is_q_strong(q):
            problems.append(f"level {j} is not {q}-strong")
        try:
            t.check()
        except ValueError as exc:
            problems.append(f"level {j}: {exc}")
    for j in range(1, len(trace.levels)):
        prev, cur = trace.levels[j - 1], trace.levels[j]
        if not cur.is_subfamily_of(prev):
            problems.append(f"level {j} is not nested in level {j - 1}")
        log = trace.logs[j - 1]
        dropped = {(r, m) for r, m in log.removed_members}
        for r, _, _ in log.removed_chains:
            dropped.update((r, m) for m in prev.at(r))
        for r, ms in prev.markers.items():
            for m in ms:
                if ((r, m) in dropped) == (m in cur.at(r)):
                    problems.append(f"step {j}: log disagrees with levels at chain {r}, marker {m:#x}")
        for r, ms in cur.markers.items():
            if len(ms) * trace.Delta < (trace.Delta - 2) * len(prev.at(r)):
                problems.append(f"step {j}: chain {r} shrank below (1 - 2/Delta)")
        if check_robust:
            M = QMarkedView(prev, q)
            for m in cur.marker_set():
                if not is_delta_robust(m, M, trace.delta):
                    problems.append(f"step {j}: survivor {m:#x} is not robust")
    return problems


@dataclass(frozen=True)
class BadProfile:
    i: int
    indices: tuple[int, ...]


def lower_bad_profile(rank: int, T0: MarkedChainFamily, T_prev: MarkedChainFamily, q: int,
                      delta, Delta) -> BadProfile:
    """Greedy (b1, b1', b2, b2', ...) profile of a chain classified heavy on the lower side.

    Indices are 1-based positions in T0(chain). Each b is the first remaining
    marker that is bad at position i on this chain; b' is the first of the
    next q - i markers of T_prev(chain) lying in its canonical witness.
    """
    delta = _as_fraction(delta)
    Delta = _as_fraction(Delta)
    M = QMarkedView(T_prev, q)
    ms = T_prev.at(rank)
    lower = bad_members(M, delta, "lower")
    if not ms or not sum(1 for m in ms if m in lower) * Delta > len(ms):
        raise ValueError(f"chain {rank} is not heavy on the lower side")
    position = {m: k + 1 for k, m in enumerate(T0.at(rank))}
    length = len(ms)

    def positional(i: int) -> list[int]:
        return [a for a, m in enumerate(ms)
                if a >= i - 1 and length - 1 - a >= q - i and i in lower.get(m, ())]

    counts = {i: positional(i) for i in range(1, q + 1)}
    threshold = Fraction(length) / (q * Delta)
    chosen = [i for i in range(1, q + 1) if len(counts[i]) > threshold]
    if not chosen:
        chosen = [i for i in range(1, q + 1) if counts[i]]
    if not chosen:
        raise ValueError(f"chain {rank} has no marker bad at its own position")
    i = chosen[0]
    out: list[int] = []
    a = 0
    bad_here = set(counts[i])
    while a < length:
        if a not in bad_here:
            a += 1
            continue
        w = find_witness(ms[a], i, delta, M, "lower")
        window = range(a + 1, min(a + 1 + q - i, length))
        hit = next((b for b in window if ms[b] in w.members), None)
        if hit is None:
            a += 1
            continue
        out.extend((position[ms[a]], position[ms[hit]]))
        a = hit + 1
    return BadProfile(i, tuple(out))


def minimal_tail_measure(M: QMarkedView) -> Fraction | None:
    """Smallest measure of any single non-anchor pool member over all (F, i, side).

    Any delta below this value makes every marker robust, since a witness
    has at least one member and measure is monotone.
    """
    best = None
    n = M.n
    for mask in M.base.marker_set():
        for i in range(1, M.q + 1):
            if M.count_at(mask, i) == 0:
                continue
            for side in SIDES:
                pool, _ = witness_constraints(mask, i, M, side)
                for d in pool:
                    v = hit_probability_sparse(mask, [d], side, n)
                    if best is None or v < best:
                        best = v
    return best

