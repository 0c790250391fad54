"""Communication graphs and their static structure.

A communication graph has one chain per process::

    start -> e_1 -> ... -> e_E -> end

where each ``e_c`` is a send or a receive, plus one communication arc from
every send to its matching receive.  Vertex ``(i, c)`` is position ``c`` of
process ``i``; position 0 is the start vertex and ``E_i + 1`` the end vertex.
"""
from __future__ import annotations

import bisect
from collections import deque
from dataclasses import dataclass
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from .errors import CausalityCycle, DepthUndefined, SelfMessage, TraceError, UnmatchedMessage

START, SEND, RECV, END = "start", "send", "recv", "end"


class VertexId(NamedTuple):
    process: int
    position: int

    def __str__(self):
        return f"{self.process}:{self.position}"


class Channel(NamedTuple):
    src: int
    dst: int

    def __str__(self):
        return f"{self.src}>{self.dst}"


class CommArc(NamedTuple):
    send: VertexId
    recv: VertexId
    msg: str


class CommGraph:
    """Immutable, validated communication graph.

    ``events[i]`` is the list of ``(kind, msg)`` pairs of process ``i``
    (start and end vertices are implicit).
    """

    def __init__(self, names: Sequence[str], events: Sequence[Sequence[Tuple[str, str]]]):
        if len(names) != len(events):
            raise TraceError("one event list is required per process name")
        if len(set(names)) != len(names):
            raise TraceError("process names must be unique")
        self.names: Tuple[str, ...] = tuple(names)
        self.events: Tuple[Tuple[Tuple[str, str], ...], ...] = tuple(
            tuple((k, str(m)) for k, m in evs) for evs in events
        )
        self.n = len(self.names)

        sends: Dict[str, VertexId] = {}
        recvs: Dict[str, VertexId] = {}
        for i, evs in enumerate(self.events):
            for c, (kind, msg) in enumerate(evs, start=1):
                if kind == SEND:
                    table = sends
                elif kind == RECV:
                    table = recvs
                else:
                    raise TraceError(f"event {c} of process {self.names[i]!r} has unknown kind {kind!r}")
                if msg in table:
                    raise UnmatchedMessage(f"message {msg!r} has more than one {kind} event")
                table[msg] = VertexId(i, c)
        for msg in sends.keys() ^ recvs.keys():
            side = "receive" if msg in sends else "send"
            raise UnmatchedMessage(f"message {msg!r} has no matching {side}")

        arcs = []
        for msg, s in sends.items():
            r = recvs[msg]
            if s.process == r.process:
                raise SelfMessage(f"message {msg!r} is sent and received by {self.names[s.process]!r}")
            arcs.append(CommArc(s, r, msg))
        arcs.sort()
        self.comm_arcs: Tuple[CommArc, ...] = tuple(arcs)
        self.partner: Dict[VertexId, VertexId] = {}
        self.arc_index: Dict[VertexId, int] = {}
        for a, arc in enumerate(self.comm_arcs):
            self.partner[arc.send] = arc.recv
            self.partner[arc.recv] = arc.send
            self.arc_index[arc.send] = a
            self.arc_index[arc.recv] = a
        self.channels: Tuple[Channel, ...] = tuple(
            sorted({Channel(a.send.process, a.recv.process) for a in self.comm_arcs})
        )

        self.offsets: List[int] = []
        total = 0
        for evs in self.events:
            self.offsets.append(total)
            total += len(evs) + 2
        self.num_vertices = total
        self._topo = self._topological_order()

    # -- indexing ---------------------------------------------------------
    def length(self, i: int) -> int:
        """Number of send/receive events E_i of process ``i``."""
        return len(self.events[i])

    def end_position(self, i: int) -> int:
        return len(self.events[i]) + 1

    def kind(self, v: VertexId) -> str:
        i, c = v
        if c == 0:
            return START
        if c == len(self.events[i]) + 1:
            return END
        return self.events[i][c - 1][0]

    def vertices(self) -> Iterable[VertexId]:
        for i in range(self.n):
            for c in range(len(self.events[i]) + 2):
                yield VertexId(i, c)

    def flat(self, v: VertexId) -> int:
        return self.offsets[v.process] + v.position

    def vertex(self, flat: int) -> VertexId:
        i = bisect.bisect_right(self.offsets, flat) - 1
        return VertexId(i, flat - self.offsets[i])

    def successors(self, v: VertexId) -> List[VertexId]:
        """Out-neighbours of ``v`` in the graph P ∪ C."""
        out = []
        if v.position < self.end_position(v.process):
            out.append(VertexId(v.process, v.position + 1))
        if self.kind(v) == SEND:
            out.append(self.partner[v])
        return out

    def channel_of(self, arc: CommArc) -> Channel:
        return Channel(arc.send.process, arc.recv.process)

    def receives(self) -> Iterable[VertexId]:
        for arc in self.comm_arcs:
            yield arc.recv

    def topological_order(self) -> List[VertexId]:
        return list(self._topo)

    def _topological_order(self) -> List[VertexId]:
        indeg = {v: 0 for v in self.vertices()}
        for v in indeg:
            for w in self.successors(v):
                indeg[w] += 1
        queue = deque(v for v, d in indeg.items() if d == 0)
        order = []
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in self.successors(v):
                indeg[w] -= 1
                if indeg[w] == 0:
                    queue.append(w)
        if len(order) != self.num_vertices:
            stuck = sorted(self.events[v.process][v.position - 1][1]
                           for v, d in indeg.items() if d > 0 and self.kind(v) == RECV)
            raise CausalityCycle(f"send/receive order is causally cyclic (messages involved: {', '.join(stuck)})")
        return order

    # -- comparison / display ----------------------------------------------
    def __eq__(self, other):
        return isinstance(other, CommGraph) and self.names == other.names and self.events == other.events

    def __hash__(self):
        return hash((self.names, self.events))

    def __repr__(self):
        return f"CommGraph(n={self.n}, vertices={self.num_vertices}, arcs={len(self.comm_arcs)})"

    def label(self, v: VertexId) -> str:
        kind = self.kind(v)
        if kind in (SEND, RECV):
            return f"{kind} {self.events[v.process][v.position - 1][1]}"
        return kind


def build_graph(doc: dict) -> CommGraph:
    """Validate a trace document (see :mod:`bufalloc.formats`) into a graph."""
    try:
        procs = doc["processes"]
        names = [p["name"] for p in procs]
        events = [[(e["kind"], e["msg"]) for e in p["events"]] for p in procs]
    except (KeyError, TypeError) as exc:
        raise TraceError(f"malformed trace document: {exc}") from exc
    return CommGraph(names, events)


def to_document(g: CommGraph) -> dict:
    return {
        "format": 1,
        "processes": [
            {"name": name, "events": [{"kind": k, "msg": m} for k, m in evs]}
            for name, evs in zip(g.names, g.events)
        ],
    }


def reverse_graph(g: CommGraph) -> CommGraph:
    """Reverse every arc: each process runs backwards and sends become receives.

    Process ``i`` keeps its index; original position ``c`` maps to
    ``E_i + 1 - c``, which swaps start and end vertices.
    """
    flipped = {SEND: RECV, RECV: SEND}
    events = [[(flipped[k], m) for k, m in reversed(evs)] for evs in g.events]
    return CommGraph(g.names, events)


# -- reachability -----------------------------------------------------------

def reach_vectors(g: CommGraph) -> Dict[VertexId, Tuple[int, ...]]:
    """For each vertex v, ``a[v][j]`` is the smallest position d such that a
    directed path leads from v to ``(j, d)``; ``g.num_vertices + 1`` if none.
    """
    inf = g.num_vertices + 1
    a: Dict[VertexId, Tuple[int, ...]] = {}
    for v in reversed(g._topo):
        succ = g.successors(v)
        if not succ:
            vec = [inf] * g.n
        elif len(succ) == 1:
            vec = list(a[succ[0]])
        else:
            vec = [x if x < y else y for x, y in zip(a[succ[0]], a[succ[1]])]
        vec[v.process] = v.position
        a[v] = tuple(vec)
    return a


def terminal_dependencies(g: CommGraph, a: Optional[Dict[VertexId, Tuple[int, ...]]] = None) -> Dict[VertexId, int]:
    """Map every receive ``(i, t)`` to the position c of the vertex it is
    terminally communication dependent on.

    ``a[(i, c)][j]`` is nondecreasing in c, so the largest qualifying c is
    found by bisection on that column.
    """
    if a is None:
        a = reach_vectors(g)
    columns: Dict[Tuple[int, int], List[int]] = {}
    deps = {}
    for arc in g.comm_arcs:
        (j, d), (i, t) = arc.send, arc.recv
        col = columns.get((i, j))
        if col is None:
            col = [a[VertexId(i, c)][j] for c in range(g.end_position(i) + 1)]
            columns[(i, j)] = col
        c = bisect.bisect_right(col, d, 0, t) - 1
        deps[arc.recv] = max(c, 0)
    return deps


# -- dependency graph -------------------------------------------------------

@dataclass(frozen=True)
class DepArc:
    tail: VertexId
    head: VertexId
    twin: Optional[int] = None  # index of the opposite arc of the same communication


class DepGraph:
    """Process arcs reversed; each communication arc present in both directions.

    Walks may not use the twin of the arc they just traversed, otherwise every
    communication would form a trivial 2-cycle.
    """

    def __init__(self, g: CommGraph):
        self.graph = g
        arcs: List[DepArc] = []
        for i in range(g.n):
            for c in range(1, g.end_position(i) + 1):
                arcs.append(DepArc(VertexId(i, c), VertexId(i, c - 1)))
        for arc in g.comm_arcs:
            k = len(arcs)
            arcs.append(DepArc(arc.send, arc.recv, twin=k + 1))
            arcs.append(DepArc(arc.recv, arc.send, twin=k))
        self.arcs: Tuple[DepArc, ...] = tuple(arcs)
        self.out: Dict[VertexId, List[int]] = {v: [] for v in g.vertices()}
        for k, arc in enumerate(self.arcs):
            self.out[arc.tail].append(k)
        self._order = self._arc_order()

    def vertices(self):
        return self.out.keys()

    def _next_arcs(self, k: int) -> List[int]:
        arc = self.arcs[k]
        return [m for m in self.out[arc.head] if m != arc.twin]

    def _arc_order(self) -> Optional[List[int]]:
        """Reverse topological order of the arc-transition graph, or None if
        it has a cycle (a closed non-backtracking walk)."""
        state = [0] * len(self.arcs)  # 0 new, 1 on stack, 2 done
        order: List[int] = []
        for root in range(len(self.arcs)):
            if state[root]:
                continue
            state[root] = 1
            stack = [(root, iter(self._next_arcs(root)))]
            while stack:
                k, it = stack[-1]
                for m in it:
                    if state[m] == 1:
                        return None
                    if state[m] == 0:
                        state[m] = 1
                        stack.append((m, iter(self._next_arcs(m))))
                        break
                else:
                    state[k] = 2
                    order.append(k)
                    stack.pop()
        return order

    def is_acyclic(self) -> bool:
        return self._order is not None

    def depths(self) -> Dict[VertexId, int]:
        """Longest walk length from each vertex to a start vertex."""
        if self._order is None:
            raise DepthUndefined("dependency graph has a cycle; depth is undefined")
        longest = [0] * len(self.arcs)
        for k in self._order:
            nxt = self._next_arcs(k)
            longest[k] = 1 + max((longest[m] for m in nxt), default=0)
        return {v: max((longest[k] for k in ks), default=0) for v, ks in self.out.items()}


def dependency_graph(g: CommGraph) -> DepGraph:
    return DepGraph(g)


def is_dep_acyclic(h) -> bool:
    if isinstance(h, CommGraph):
        h = DepGraph(h)
    return h.is_acyclic()


def depths(h) -> Dict[VertexId, int]:
    if isinstance(h, CommGraph):
        h = DepGraph(h)
    return h.depths()


# -- rings ----------------------------------------------------------------

class Ring(NamedTuple):
    """Cyclic list of ``(send, recv)`` pairs, one per participating process.

    The receive of member j is fed by the send of member j+1 (cyclically).
    """
    members: Tuple[Tuple[VertexId, VertexId], ...]

    @property
    def processes(self) -> Tuple[int, ...]:
        return tuple(s.process for s, _ in self.members)

    @property
    def t(self) -> int:
        return len(self.members)

    def arcs(self) -> List[Tuple[VertexId, VertexId]]:
        m = self.members
        return [(m[(j + 1) % len(m)][0], m[j][1]) for j in range(len(m))]


def find_rings(g: CommGraph, t_max: int, max_rings: Optional[int] = None) -> List[Ring]:
    """Enumerate all t-rings with ``2 <= t <= t_max``.

    Search runs over communication arcs: arc e (sent by P, received by Q) may
    be followed by an arc e' received by P at a position after e's send.  A
    ring is a closed walk of such steps through distinct processes.  Rings
    differing only by rotation are reported once.
    """
    if t_max < 2:
        raise ValueError("t_max must be at least 2")
    arcs = g.comm_arcs
    into: Dict[int, List[int]] = {i: [] for i in range(g.n)}
    for k, arc in enumerate(arcs):
        into[arc.recv.process].append(k)
    follow = [
        [m for m in into[arc.send.process] if arcs[m].recv.position > arc.send.position]
        for arc in arcs
    ]
    rings: List[Ring] = []
    for start in range(len(arcs)):
        first_recv = arcs[start].recv.process
        path = [start]
        used = {arcs[start].recv.process, arcs[start].send.process}
        stack = [iter(follow[start])]
        while stack:
            for m in stack[-1]:
                if m <= start:
                    continue
                arc = arcs[m]
                # arc m is received by the sender of path[-1]
                if arc.send.process == first_recv:
                    if len(path) + 1 > t_max or arc.send.position >= arcs[start].recv.position:
                        continue
                    rings.append(_ring_from_arcs(arcs, path + [m]))
                    if max_rings is not None and len(rings) >= max_rings:
                        return rings
                    continue
                if len(path) + 1 >= t_max or arc.send.process in used:
                    continue
                path.append(m)
                used.add(arc.send.process)
                stack.append(iter(follow[m]))
                break
            else:
                stack.pop()
                if len(path) > 1:
                    used.discard(arcs[path.pop()].send.process)
    return rings


def _ring_from_arcs(arcs, path) -> Ring:
    # path[k] is received by member k and sent by member k+1
    t = len(path)
    members = []
    for k in range(t):
        recv = arcs[path[k]].recv
        send = arcs[path[k - 1]].send  # member k sends the arc received by member k-1
        members.append((send, recv))
    return Ring(tuple(members))


# -- export -----------------------------------------------------------------

def to_dot(g: CommGraph) -> str:
    lines = ["digraph comm {", "  rankdir=TB;", "  node [shape=circle, fontsize=9];"]
    for i in range(g.n):
        lines.append(f"  subgraph cluster_{i} {{")
        lines.append(f'    label="{g.names[i]}";')
        chain = []
        for c in range(g.end_position(i) + 1):
            v = VertexId(i, c)
            node = f"v{i}_{c}"
            lines.append(f'    {node} [label="{g.label(v)}"];')
            chain.append(node)
        if len(chain) > 1:
            lines.append("    " + " -> ".join(chain) + ";")
        lines.append("  }")
    for arc in g.comm_arcs:
        s, r = arc.send, arc.recv
        lines.append(f'  v{s.process}_{s.position} -> v{r.process}_{r.position} [style=dashed, constraint=false, label="{arc.msg}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
