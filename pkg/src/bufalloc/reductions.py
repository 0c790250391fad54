"""Hardness gadgets as executable fixtures, plus two graph transforms.

Each ``sat_to_*``/``dnf_to_*`` constructor returns a :class:`Reduction`
holding the graph, the token budget or fixed assignment, and an encoder
mapping a truth assignment to the token assignment it corresponds to.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from .coloring import BufferAssignment, Scheme
from .errors import FormulaError
from .graph import RECV, SEND, Channel, CommGraph

Literal = int
Truth = Tuple[bool, ...]


def _check_literals(n: int, groups, what: str):
    if n < 1:
        raise FormulaError("a formula needs at least one variable")
    for group in groups:
        if len(group) != 3:
            raise FormulaError(f"every {what} needs exactly three literals, got {len(group)}")
        for lit in group:
            if not isinstance(lit, int) or lit == 0 or abs(lit) > n:
                raise FormulaError(f"literal {lit!r} out of range for {n} variables")


def _value(lit: Literal, x: Truth) -> bool:
    return x[abs(lit) - 1] == (lit > 0)


def truth_assignments(n: int):
    return itertools.product((False, True), repeat=n)


@dataclass(frozen=True)
class Cnf3:
    n: int
    clauses: Tuple[Tuple[int, int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(tuple(c) for c in self.clauses))
        _check_literals(self.n, self.clauses, "clause")

    def evaluate(self, x: Truth) -> bool:
        return all(any(_value(l, x) for l in c) for c in self.clauses)

    def satisfying_assignment(self) -> Optional[Truth]:
        for x in truth_assignments(self.n):
            if self.evaluate(x):
                return x
        return None

    def satisfiable(self) -> bool:
        return self.satisfying_assignment() is not None


@dataclass(frozen=True)
class Dnf3:
    n: int
    terms: Tuple[Tuple[int, int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(tuple(t) for t in self.terms))
        _check_literals(self.n, self.terms, "term")
        if not self.terms:
            raise FormulaError("a disjunction needs at least one term")

    def evaluate(self, x: Truth) -> bool:
        return any(all(_value(l, x) for l in t) for t in self.terms)

    def falsifying_assignment(self) -> Optional[Truth]:
        for x in truth_assignments(self.n):
            if not self.evaluate(x):
                return x
        return None

    def is_tautology(self) -> bool:
        return self.falsifying_assignment() is None


Formula = Union[Cnf3, Dnf3]


def parse_dimacs(text: str) -> Formula:
    """Parse ``p cnf n c`` or ``p dnf n t`` text; ``c`` lines are comments."""
    header = None
    groups: List[List[int]] = []
    current: List[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] not in ("cnf", "dnf"):
                raise FormulaError(f"line {lineno}: bad header {line!r}")
            try:
                header = (parts[1], int(parts[2]), int(parts[3]))
            except ValueError as exc:
                raise FormulaError(f"line {lineno}: bad header {line!r}") from exc
            continue
        if header is None:
            raise FormulaError(f"line {lineno}: clause before the 'p' header")
        try:
            nums = [int(tok) for tok in line.split()]
        except ValueError as exc:
            raise FormulaError(f"line {lineno}: {exc}") from exc
        for lit in nums:
            if lit == 0:
                groups.append(current)
                current = []
            else:
                current.append(lit)
    if header is None:
        raise FormulaError("missing 'p cnf' or 'p dnf' header")
    if current:
        raise FormulaError("last clause is not terminated by 0")
    kind, n, count = header
    if len(groups) != count:
        raise FormulaError(f"header announces {count} {kind} groups, found {len(groups)}")
    return Cnf3(n, groups) if kind == "cnf" else Dnf3(n, groups)


def to_dimacs(f: Formula) -> str:
    kind, groups = ("cnf", f.clauses) if isinstance(f, Cnf3) else ("dnf", f.terms)
    lines = [f"p {kind} {f.n} {len(groups)}"]
    lines += [" ".join(str(l) for l in g) + " 0" for g in groups]
    return "\n".join(lines) + "\n"


# -- graph assembly ----------------------------------------------------------

class _Builder:
    def __init__(self):
        self.names: List[str] = []
        self.events: List[List[Tuple[str, str]]] = []
        self.index: Dict[str, int] = {}
        self._msg = 0

    def proc(self, name: str) -> str:
        self.index[name] = len(self.names)
        self.names.append(name)
        self.events.append([])
        return name

    def msg(self, label: str) -> str:
        self._msg += 1
        return f"{label}#{self._msg}"

    def send(self, p: str, m: str):
        self.events[self.index[p]].append((SEND, m))

    def recv(self, p: str, m: str):
        self.events[self.index[p]].append((RECV, m))

    def ring(self, members: Sequence[str], label: str):
        """Every member sends to the next member, then receives from the previous one."""
        t = len(members)
        msgs = [self.msg(f"{label}:{members[k]}>{members[(k + 1) % t]}") for k in range(t)]
        for k, p in enumerate(members):
            self.send(p, msgs[k])
            self.recv(p, msgs[k - 1])

    def graph(self) -> CommGraph:
        return CommGraph(self.names, self.events)


def literal_name(lit: Literal) -> str:
    return f"x{lit}" if lit > 0 else f"~x{-lit}"


def _literals(n: int) -> List[Literal]:
    return [l for i in range(1, n + 1) for l in (i, -i)]


def _distinct(group) -> List[Literal]:
    out = []
    for l in group:
        if l not in out:
            out.append(l)
    return out


@dataclass(frozen=True)
class Reduction:
    graph: CommGraph
    scheme: Scheme
    k: Optional[int] = None
    fixed: Optional[BufferAssignment] = None
    encode: Optional[Callable[[Truth], BufferAssignment]] = None
    kind: str = ""


def sat_to_bap_receive(f: Cnf3) -> Reduction:
    """A safe n-token receive-side assignment exists iff ``f`` is satisfiable.

    Literal components carry one 2-ring per variable, then one ring per
    clause over the clause's literal components; a barrier component
    closes every epoch.  A clause with a single distinct literal becomes a
    2-ring between that literal and the barrier, which never holds tokens
    in an n-token safe assignment.
    """
    b = _Builder()
    lits = _literals(f.n)
    comp = {l: b.proc(f"P_{literal_name(l)}") for l in lits}
    barrier = b.proc("P_barrier")

    def close_epoch(j):
        up = {l: b.msg(f"s_{literal_name(l)},{j}") for l in lits}
        down = {l: b.msg(f"t_{literal_name(l)},{j}") for l in lits}
        for l in lits:
            b.send(comp[l], up[l])
        for l in lits:
            b.recv(barrier, up[l])
        for l in lits:
            b.send(barrier, down[l])
        for l in lits:
            b.recv(comp[l], down[l])

    for i in range(1, f.n + 1):
        b.ring([comp[i], comp[-i]], f"var{i}")
    close_epoch(0)
    for j, clause in enumerate(f.clauses, 1):
        members = [comp[l] for l in _distinct(clause)]
        if len(members) == 1:
            members.append(barrier)
        b.ring(members, f"clause{j}")
        close_epoch(j)
    g = b.graph()

    def encode(x: Truth) -> BufferAssignment:
        counts = [0] * g.n
        for i, v in enumerate(x, 1):
            counts[g.names.index(comp[i if v else -i])] = 1
        return BufferAssignment.processes(Scheme.RECEIVE, counts)

    return Reduction(g, Scheme.RECEIVE, k=f.n, encode=encode, kind="sat-bap-r")


def dnf_to_bsp_receive(f: Dnf3) -> Reduction:
    """The fixed assignment is sufficient iff ``f`` is a tautology.

    A single-term formula is handled by repeating the term, since a ring
    needs at least two components; this leaves the formula unchanged.
    """
    terms = list(f.terms)
    if len(terms) == 1:
        terms = terms * 2
    lits = _literals(f.n)
    var = {l: f"P_{literal_name(l)}" for l in lits}
    arb = {}
    # process order: P_x1, P_~x1, Q_1, P_x2, ...
    b = _Builder()
    for i in range(1, f.n + 1):
        b.proc(var[i])
        b.proc(var[-i])
        arb[i] = b.proc(f"Q_{i}")
    term = [b.proc(f"T_{j}") for j in range(1, len(terms) + 1)]

    # receives each literal's disperser must reach: (term index, occurrence)
    targets: Dict[Literal, List[Tuple[int, int]]] = {l: [] for l in lits}
    for j, t in enumerate(terms):
        for k, l in enumerate(t):
            targets[l].append((j, k))

    s_msg = {l: b.msg(f"s_{literal_name(l)}") for l in lits}
    t_msg = {l: b.msg(f"t_{literal_name(l)}") for l in lits}
    q_msg = {i: b.msg(f"q_{i}") for i in range(1, f.n + 1)}
    done_msg = b.msg("s_done")
    ring_msg = [b.msg(f"s_{j + 1}") for j in range(len(terms))]
    occ_msg = {(j, k): b.msg(f"r_{j + 1},{literal_name(terms[j][k])}") for j in range(len(terms)) for k in range(3)}

    for i in range(1, f.n + 1):
        for l in (i, -i):
            b.send(var[l], s_msg[l])
            b.send(var[l], t_msg[l])
        b.recv(arb[i], q_msg[i])
        b.recv(arb[i], s_msg[i])
        b.recv(arb[i], s_msg[-i])
    for j, p in enumerate(term):
        b.send(p, ring_msg[j])
        b.recv(p, ring_msg[j - 1])
        if j == 0:
            b.send(p, done_msg)
        for k in range(3):
            b.recv(p, occ_msg[(j, k)])

    def disperser(label: str, trigger: str, outs: List[str]):
        master = b.proc(f"M_{label}")
        b.recv(master, trigger)
        for idx, out in enumerate(outs):
            slave = b.proc(f"S_{label}.{idx + 1}")
            inner = b.msg(f"{label}>{idx + 1}")
            b.send(master, inner)
            b.recv(slave, inner)
            b.send(slave, out)

    for l in lits:
        disperser(literal_name(l), t_msg[l], [occ_msg[o] for o in targets[l]])
    disperser("done", done_msg, [q_msg[i] for i in range(1, f.n + 1)])
    g = b.graph()
    counts = [0] * g.n
    for name in list(arb.values()) + term:
        counts[g.names.index(name)] = 1
    fixed = BufferAssignment.processes(Scheme.RECEIVE, counts)
    return Reduction(g, Scheme.RECEIVE, fixed=fixed, kind="dnf-bsp-r")


def sat_to_nbap_mixed(f: Cnf3) -> Reduction:
    """A block-free (n+2)-token mixed assignment exists iff ``f`` is satisfiable.

    Repeated literals get one set of vertices per occurrence; a component
    hosting several occurrences lists all its synchronization vertices of
    the epoch before its evaluation vertices, matching the order on P.
    """
    b = _Builder()
    lits = _literals(f.n)
    comp = {l: b.proc(f"P_{literal_name(l)}") for l in lits}
    hub = b.proc("P")
    q = [b.proc("Q_0"), b.proc("Q_1")]

    for i in range(1, f.n + 1):
        m = b.msg(f"s_{i}")
        b.send(comp[i], m)
        b.recv(comp[-i], m)
    for h in (0, 1):
        down = [b.msg(f"s_{h},{k}") for k in (1, 2)]
        up = [b.msg(f"t_{h},{k}") for k in (1, 2)]
        for m in down:
            b.send(hub, m)
        for m in down:
            b.recv(q[h], m)
        for m in up:
            b.send(q[h], m)
        for m in up:
            b.recv(hub, m)
    # handshake with every literal: the epoch-0 receive must be green before
    # P starts the clauses, so no literal token stays parked on an epoch-0 arc
    for l in lits:
        down, up = b.msg(f"u_{literal_name(l)}"), b.msg(f"v_{literal_name(l)}")
        b.send(hub, down)
        b.recv(hub, up)
        b.recv(comp[l], down)
        b.send(comp[l], up)

    for j, clause in enumerate(f.clauses, 1):
        members = [comp[l] for l in clause]
        names = [f"{literal_name(l)},{j}.{k}" for k, l in enumerate(clause)]
        s = [b.msg(f"s_{nm}") for nm in names]
        t = [b.msg(f"t_{nm}") for nm in names]
        s2 = [b.msg(f"s'_{nm}") for nm in names]
        t2 = [b.msg(f"t'_{nm}") for nm in names]
        for k in range(3):
            b.send(hub, s[k])
            b.recv(hub, t[k])
        for k in range(3):
            b.send(hub, s2[k])
        for k in range(3):
            b.recv(hub, t2[k])
        for k, p in enumerate(members):
            b.recv(p, s[k])
            b.send(p, t[k])
        for k, p in enumerate(members):
            b.recv(p, s2[k])
            b.send(p, t2[k])
    g = b.graph()

    def encode(x: Truth) -> BufferAssignment:
        counts = [0] * g.n
        for i, v in enumerate(x, 1):
            counts[g.names.index(comp[i if v else -i])] = 1
        counts[g.names.index(hub)] = 2
        return BufferAssignment.processes(Scheme.MIXED, counts)

    return Reduction(g, Scheme.MIXED, k=f.n + 2, encode=encode, kind="sat-nbap-sr")


def sat_to_bap_channel(f: Cnf3) -> Reduction:
    """A safe n-token channel assignment exists iff ``f`` is satisfiable.

    Each clause becomes a ring alternating each literal with its
    complement.  Clauses containing a literal and its complement are
    always true and get no ring; a clause with one distinct literal a uses
    the ring a -> ~a -> H -> a through a fresh helper component H.
    """
    b = _Builder()
    lits = _literals(f.n)
    comp = {l: b.proc(f"P_{literal_name(l)}") for l in lits}
    for i in range(1, f.n + 1):
        b.ring([comp[i], comp[-i]], f"var{i}")
    pending = []
    for j, clause in enumerate(f.clauses, 1):
        d = _distinct(clause)
        if any(-l in d for l in d):
            continue
        members = [comp[x] for l in d for x in (l, -l)]
        if len(d) == 1:
            members.append(b.proc(f"H_{j}"))
        pending.append((j, members))
    for j, members in pending:
        b.ring(members, f"clause{j}")
    g = b.graph()

    def encode(x: Truth) -> BufferAssignment:
        counts = {}
        for i, v in enumerate(x, 1):
            a, c = (comp[i], comp[-i]) if v else (comp[-i], comp[i])
            counts[Channel(g.names.index(a), g.names.index(c))] = 1
        return BufferAssignment.channels(counts)

    return Reduction(g, Scheme.CHANNEL, k=f.n, encode=encode, kind="sat-bap-ch")


REDUCTIONS = {
    "sat-bap-r": sat_to_bap_receive,
    "dnf-bsp-r": dnf_to_bsp_receive,
    "sat-nbap-sr": sat_to_nbap_mixed,
    "sat-bap-ch": sat_to_bap_channel,
}


# -- transforms ---------------------------------------------------------------

def expand_channel_tokens(g: CommGraph, b: BufferAssignment) -> Tuple[CommGraph, BufferAssignment]:
    """Replace every m-token channel by a chain of m relay components.

    Relays forward messages in send order, which models the channel exactly
    when its messages are received in the order they were sent.
    """
    if b.scheme is not Scheme.CHANNEL:
        raise ValueError("channel expansion needs a channel assignment")
    counts = dict(zip(g.channels, b.vector(g)))
    names = list(g.names)
    events = [list(evs) for evs in g.events]
    used = set(names)
    for ch, m in counts.items():
        if m == 0:
            continue
        arcs = sorted((a for a in g.comm_arcs if g.channel_of(a) == ch), key=lambda a: a.send.position)
        relays = []
        for k in range(1, m + 1):
            name = f"{g.names[ch.src]}>{g.names[ch.dst]}.{k}"
            while name in used:
                name += "'"
            used.add(name)
            relays.append(len(names))
            names.append(name)
            events.append([])
        rename = {}
        for arc in arcs:
            prev = arc.msg
            for k, rp in enumerate(relays, 1):
                nxt = f"{arc.msg}@{k}"
                events[rp].append((RECV, prev))
                events[rp].append((SEND, nxt))
                prev = nxt
            rename[arc.msg] = prev
        dst = events[ch.dst]
        for c, (kind, msg) in enumerate(dst):
            if kind == RECV and msg in rename:
                dst[c] = (RECV, rename[msg])
    out = CommGraph(names, events)
    return out, BufferAssignment.zeros(out, Scheme.CHANNEL)


def receive_to_mixed(g: CommGraph) -> CommGraph:
    """Route every message through a fresh zero-token relay P'.

    For an arc s -> r, P' first sends to r and then receives from s.  Under
    the mixed scheme the receive r can only be buffered from its own
    process pool, as P' holds no tokens.
    """
    names = list(g.names)
    events = [list(evs) for evs in g.events]
    used = set(names)
    for arc in g.comm_arcs:
        name = f"relay[{arc.msg}]"
        while name in used:
            name += "'"
        used.add(name)
        fwd = f"{arc.msg}@out"
        names.append(name)
        events.append([(SEND, fwd), (RECV, arc.msg)])
        i, c = arc.recv
        events[i][c - 1] = (RECV, fwd)
    return CommGraph(names, events)
