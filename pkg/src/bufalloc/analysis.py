"""Decision procedures: nonblocking assignments, sufficiency and minimal buffers."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .coloring import (DEFAULT_STATE_LIMIT, BufferAssignment, Move, Outcome, PoolKey, Scheme, Target,
                       Verdict, explore, run_greedy)
from .graph import Channel, CommGraph, VertexId, find_rings, reverse_graph, terminal_dependencies


@dataclass(frozen=True)
class Interval:
    """Buffer demand of one receive, half-open in its owner's positions: (start, stop]."""
    start: int
    stop: int
    recv: VertexId

    def covers(self, x: int) -> bool:
        return self.start < x <= self.stop


@dataclass
class IntervalSet:
    scheme: Scheme
    pools: List[PoolKey]
    intervals: Dict[PoolKey, List[Interval]] = field(default_factory=dict)
    # number of positions per pool, for the per-position overlap table
    spans: Dict[PoolKey, int] = field(default_factory=dict)

    def max_overlap(self, pool: PoolKey) -> int:
        return max_overlap(self.intervals.get(pool, []))

    def overlaps(self, pool: PoolKey) -> List[int]:
        """Overlap count at positions 1..span of the pool's process."""
        diff = [0] * (self.spans[pool] + 2)
        for iv in self.intervals.get(pool, []):
            diff[iv.start + 1] += 1
            diff[iv.stop + 1] -= 1
        out, run = [], 0
        for x in range(1, self.spans[pool] + 1):
            run += diff[x]
            out.append(run)
        return out

    def assignment(self) -> BufferAssignment:
        counts = [self.max_overlap(p) for p in self.pools]
        if self.scheme is Scheme.CHANNEL:
            return BufferAssignment.channels(dict(zip(self.pools, counts)))
        return BufferAssignment.processes(self.scheme, counts)


def max_overlap(intervals: Sequence[Interval]) -> int:
    """Sweep over sorted endpoints; at equal coordinates releases go first."""
    events = []
    for iv in intervals:
        events.append((iv.stop, 0))
        events.append((iv.start, 1))
    events.sort()
    best = cur = 0
    for _, acquire in events:
        if acquire:
            cur += 1
            if cur > best:
                best = cur
        else:
            cur -= 1
    return best


def _receive_intervals(g: CommGraph) -> Dict[VertexId, Interval]:
    deps = terminal_dependencies(g)
    return {r: Interval(c, r.position, r) for r, c in deps.items()}


def intervals(g: CommGraph, scheme=Scheme.RECEIVE) -> IntervalSet:
    scheme = Scheme(scheme)
    if scheme is Scheme.RECEIVE:
        out = IntervalSet(scheme, list(range(g.n)))
        for i in range(g.n):
            out.intervals[i] = []
            out.spans[i] = g.end_position(i)
        for r, iv in sorted(_receive_intervals(g).items()):
            out.intervals[r.process].append(iv)
        return out
    if scheme is Scheme.SEND:
        rev = intervals(reverse_graph(g), Scheme.RECEIVE)
        rev.scheme = Scheme.SEND
        return rev
    if scheme is Scheme.CHANNEL:
        out = IntervalSet(scheme, list(g.channels))
        for ch in g.channels:
            out.intervals[ch] = []
            out.spans[ch] = g.end_position(ch.dst)
        for r, iv in sorted(_receive_intervals(g).items()):
            out.intervals[g.channel_of(g.comm_arcs[g.arc_index[r]])].append(iv)
        return out
    raise ValueError("interval analysis is not defined for the mixed scheme")


def nbap_receive(g: CommGraph) -> BufferAssignment:
    return intervals(g, Scheme.RECEIVE).assignment()


def nbap_send(g: CommGraph) -> BufferAssignment:
    """Receive-side intervals of the reversed graph; process indices are preserved."""
    return intervals(g, Scheme.SEND).assignment()


def nbap_channel(g: CommGraph) -> BufferAssignment:
    return intervals(g, Scheme.CHANNEL).assignment()


def nbap(g: CommGraph, scheme) -> BufferAssignment:
    scheme = Scheme(scheme)
    if scheme is Scheme.MIXED:
        return nbap_mixed_min(g)[1]
    return intervals(g, scheme).assignment()


# -- exhaustive searches ------------------------------------------------------

def compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    """All vectors of ``parts`` nonnegative ints summing to ``total``, lexicographically."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def _is_block_free(g, b, limit) -> bool:
    return explore(g, b, Target.BLOCK, limit).outcome is Outcome.ALL_COMPLETE


def nbap_mixed_min(g: CommGraph, limit: int = DEFAULT_STATE_LIMIT,
                   max_total: Optional[int] = None) -> Tuple[int, BufferAssignment]:
    """Smallest total k for which some mixed assignment is block-free."""
    if max_total is None:
        max_total = len(g.comm_arcs)
    for k in range(max_total + 1):
        for counts in compositions(k, g.n):
            b = BufferAssignment.processes(Scheme.MIXED, counts)
            if _is_block_free(g, b, limit):
                return k, b
    raise ValueError(f"no block-free mixed assignment with at most {max_total} tokens")


def bsp(g: CommGraph, b: BufferAssignment, limit: int = DEFAULT_STATE_LIMIT) -> Verdict:
    """Decide whether ``b`` lets every colouring sequence complete."""
    if b.scheme is Scheme.CHANNEL:
        b.vector(g)
        return run_greedy(g, b)
    return explore(g, b, Target.DEADLOCK, limit)


@dataclass(frozen=True)
class MinimalityCertificate:
    """For each nonzero pool, a failing witness with that pool decremented."""
    assignment: BufferAssignment
    witnesses: Dict[PoolKey, Tuple[Move, ...]]


@dataclass(frozen=True)
class BapResult:
    k: int
    assignment: BufferAssignment
    certificate: MinimalityCertificate
    lower_bound: int
    upper_bound: Optional[int]
    candidates_checked: int


def ring_lower_bound(g: CommGraph, scheme, max_rings: int = 10_000) -> int:
    """Greedy count of rings whose candidate pools are pairwise disjoint.

    Each ring needs one buffered receive, and that token comes from a pool
    tied to the ring, so disjoint rings need distinct tokens.
    """
    scheme = Scheme(scheme)
    used = set()
    count = 0
    rings = find_rings(g, g.n, max_rings=max_rings)
    for ring in sorted(rings, key=lambda r: r.t):
        if scheme is Scheme.CHANNEL:
            pools = {Channel(s.process, r.process) for s, r in ring.arcs()}
        else:
            pools = set(ring.processes)
        if pools.isdisjoint(used):
            used |= pools
            count += 1
    return count


def bap_min(g: CommGraph, scheme, limit: int = DEFAULT_STATE_LIMIT,
            max_total: Optional[int] = None) -> BapResult:
    """Exact minimal safe assignment by enumeration of increasing totals."""
    scheme = Scheme(scheme)
    lower = ring_lower_bound(g, scheme)
    if scheme is Scheme.MIXED:
        upper = None
    else:
        upper = nbap(g, scheme).total
    stop = upper if upper is not None else (max_total if max_total is not None else len(g.comm_arcs))
    if max_total is not None:
        stop = min(stop, max_total)
    zero = BufferAssignment.zeros(g, scheme)
    keys = zero.pool_keys(g)
    checked = 0
    for k in range(lower, stop + 1):
        for counts in compositions(k, len(keys)):
            b = BufferAssignment.from_vector(g, scheme, counts)
            checked += 1
            if bsp(g, b, limit).ok:
                cert = minimality_certificate(g, b, limit)
                return BapResult(k, b, cert, lower, upper, checked)
    raise ValueError(f"no safe assignment with at most {stop} tokens")


def minimality_certificate(g: CommGraph, b: BufferAssignment, limit: int = DEFAULT_STATE_LIMIT) -> MinimalityCertificate:
    witnesses = {}
    vec = b.vector(g)
    for key, count in zip(b.pool_keys(g), vec):
        if count == 0:
            continue
        verdict = bsp(g, b.with_count(key, count - 1), limit)
        if verdict.ok:
            raise AssertionError(f"assignment {b} is not minimal: pool {key} can be decremented")
        witnesses[key] = verdict.witness
    return MinimalityCertificate(b, witnesses)
