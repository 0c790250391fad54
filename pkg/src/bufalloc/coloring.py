"""The colouring game and exhaustive schedule exploration.

Vertices move red -> yellow -> green.  Tokens model buffers: a receive may
turn yellow early by taking a token from a pool and holding it on its
incoming arc until the receive turns green.

Internally a colouring is one ``bytes`` object with a code per vertex:

    0 red, 1 yellow, 2 green,
    3 yellow receive holding a token from the arc's default pool,
    4 yellow receive holding a token from the receiver's pool (mixed scheme).

The default pool of an arc is the receiver (receive scheme), the sender
(send and mixed schemes) or the arc's channel (channel scheme).  The code
vector alone determines the pool contents, so it is the visited-set key.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

from .errors import AssignmentShapeMismatch, IllegalMove, StateLimitExceeded
from .graph import END, RECV, SEND, START, Channel, CommGraph, VertexId

DEFAULT_STATE_LIMIT = 5_000_000

RED, YELLOW, GREEN, BUF, BUF_RECV = 0, 1, 2, 3, 4
_YELLOWISH = (YELLOW, BUF, BUF_RECV)
_K_START, _K_SEND, _K_RECV, _K_END = 0, 1, 2, 3
_KIND_CODE = {START: _K_START, SEND: _K_SEND, RECV: _K_RECV, END: _K_END}


class Scheme(str, enum.Enum):
    RECEIVE = "receive"
    SEND = "send"
    MIXED = "mixed"
    CHANNEL = "channel"

    @property
    def per_process(self) -> bool:
        return self is not Scheme.CHANNEL


class Colour(enum.Enum):
    RED = "red"
    YELLOW = "yellow"
    GREEN = "green"


class Rule(enum.IntEnum):
    SendYel = 0
    RecvYel = 1
    RecvBufYel = 2
    SendGrn = 3
    RecvGrn = 4
    EndYel = 5
    EndGrn = 6


class Target(str, enum.Enum):
    DEADLOCK = "deadlock"
    BLOCK = "block"


class Outcome(str, enum.Enum):
    ALL_COMPLETE = "AllComplete"
    DEADLOCK_FOUND = "DeadlockFound"
    BLOCK_FOUND = "BlockFound"


PoolKey = Union[int, Channel]


class TakeFrom(NamedTuple):
    pool: PoolKey


class SwapVia(NamedTuple):
    """Mixed-scheme lazy rule 3: the sender's token sitting on the arc into
    ``other`` is replaced by a token of ``pool`` (the receiver of that arc);
    the freed sender token goes to the current receive."""
    other: VertexId
    pool: PoolKey


@dataclass(frozen=True)
class Move:
    rule: Rule
    vertex: VertexId
    token: Optional[Union[TakeFrom, SwapVia]] = None

    def __str__(self):
        text = f"{self.rule.name} {self.vertex}"
        if isinstance(self.token, TakeFrom):
            text += f" token {self.token.pool}"
        elif isinstance(self.token, SwapVia):
            text += f" token {self.token.pool} via {self.token.other}"
        return text


@dataclass(frozen=True)
class BufferAssignment:
    """Token counts per pool.

    Per-process schemes store one count per process, in process order.
    The channel scheme stores ``(Channel, count)`` pairs; channels of the
    graph that are not listed hold zero tokens.
    """
    scheme: Scheme
    per_process: Optional[Tuple[int, ...]] = None
    per_channel: Optional[Tuple[Tuple[Channel, int], ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.scheme.per_process:
            if self.per_process is None or self.per_channel is not None:
                raise AssignmentShapeMismatch(f"{self.scheme.value} scheme needs per-process counts")
            object.__setattr__(self, "per_process", tuple(int(x) for x in self.per_process))
            counts = self.per_process
        else:
            if self.per_channel is None or self.per_process is not None:
                raise AssignmentShapeMismatch("channel scheme needs per-channel counts")
            items = self.per_channel.items() if isinstance(self.per_channel, Mapping) else self.per_channel
            pairs = tuple(sorted((Channel(*ch), int(m)) for ch, m in items))
            object.__setattr__(self, "per_channel", pairs)
            counts = [m for _, m in pairs]
        if any(m < 0 for m in counts):
            raise AssignmentShapeMismatch("token counts must be nonnegative")

    @classmethod
    def processes(cls, scheme, counts: Iterable[int]) -> "BufferAssignment":
        return cls(Scheme(scheme), per_process=tuple(counts))

    @classmethod
    def channels(cls, counts: Union[Mapping, Iterable]) -> "BufferAssignment":
        return cls(Scheme.CHANNEL, per_channel=counts)

    @classmethod
    def zeros(cls, g: CommGraph, scheme) -> "BufferAssignment":
        scheme = Scheme(scheme)
        if scheme.per_process:
            return cls.processes(scheme, [0] * g.n)
        return cls.channels({ch: 0 for ch in g.channels})

    @property
    def total(self) -> int:
        if self.per_process is not None:
            return sum(self.per_process)
        return sum(m for _, m in self.per_channel)

    def pool_keys(self, g: CommGraph) -> List[PoolKey]:
        return list(range(g.n)) if self.scheme.per_process else list(g.channels)

    def vector(self, g: CommGraph) -> List[int]:
        """Counts aligned with :meth:`pool_keys`, validated against ``g``."""
        if self.scheme.per_process:
            if len(self.per_process) != g.n:
                raise AssignmentShapeMismatch(
                    f"assignment has {len(self.per_process)} counts for {g.n} processes")
            return list(self.per_process)
        known = set(g.channels)
        extra = [ch for ch, _ in self.per_channel if ch not in known]
        if extra:
            raise AssignmentShapeMismatch(f"channels not used by the graph: {', '.join(map(str, extra))}")
        given = dict(self.per_channel)
        return [given.get(ch, 0) for ch in g.channels]

    def count(self, key: PoolKey) -> int:
        if self.per_process is not None:
            return self.per_process[key]
        return dict(self.per_channel).get(Channel(*key), 0)

    def with_count(self, key: PoolKey, value: int) -> "BufferAssignment":
        if self.per_process is not None:
            counts = list(self.per_process)
            counts[key] = value
            return BufferAssignment.processes(self.scheme, counts)
        counts = dict(self.per_channel)
        counts[Channel(*key)] = value
        return BufferAssignment.channels(counts)

    @classmethod
    def from_vector(cls, g: CommGraph, scheme, counts: Sequence[int]) -> "BufferAssignment":
        scheme = Scheme(scheme)
        if scheme.per_process:
            return cls.processes(scheme, counts)
        return cls.channels(dict(zip(g.channels, counts)))

    def __str__(self):
        if self.per_process is not None:
            return f"{self.scheme.value}{self.per_process}"
        return f"channel{{{', '.join(f'{ch}: {m}' for ch, m in self.per_channel)}}}"


@dataclass(frozen=True)
class ColoringState:
    codes: bytes
    pool_free: Tuple[int, ...]
    game: "Game" = field(compare=False, repr=False)

    def colour(self, v: VertexId) -> Colour:
        code = self.codes[self.game.graph.flat(v)]
        if code == RED:
            return Colour.RED
        if code == GREEN:
            return Colour.GREEN
        return Colour.YELLOW

    @property
    def arc_tokens(self) -> Dict[VertexId, PoolKey]:
        """Receive vertex of each arc currently holding a token -> owning pool."""
        game = self.game
        out = {}
        for flat in game.recv_flats:
            owner = game.token_owner(self.codes, flat)
            if owner >= 0:
                out[game.graph.vertex(flat)] = game.pool_keys[owner]
        return out

    def is_complete(self) -> bool:
        return all(c == GREEN for c in self.codes)

    def green_set(self) -> frozenset:
        return frozenset(self.game.graph.vertex(k) for k, c in enumerate(self.codes) if c == GREEN)


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    witness: Optional[Tuple[Move, ...]] = None
    states_explored: int = 0

    @property
    def ok(self) -> bool:
        return self.outcome is Outcome.ALL_COMPLETE


# A move inside the engine: (rule, flat vertex, pool index or -1, swapped flat receive or -1)
_IMove = Tuple[int, int, int, int]


class Game:
    """Precompiled rule tables for one graph and one buffer assignment."""

    def __init__(self, g: CommGraph, b: BufferAssignment):
        self.graph = g
        self.assignment = b
        self.scheme = b.scheme
        self.capacity = b.vector(g)
        self.pool_keys = b.pool_keys(g)
        V = g.num_vertices
        self.kind = bytearray(V)
        self.partner = [-1] * V
        self.proc = [0] * V
        self.last = [0] * V  # flat id of the end vertex of the vertex's process
        self.default_pool = [-1] * V
        self.recv_proc_pool = [-1] * V
        self.sender_of = [-1] * V
        chan_index = {ch: k for k, ch in enumerate(g.channels)}
        for i in range(g.n):
            base = g.offsets[i]
            end = base + g.end_position(i)
            for c in range(g.end_position(i) + 1):
                v = base + c
                self.kind[v] = _KIND_CODE[g.kind(VertexId(i, c))]
                self.proc[v] = i
                self.last[v] = end
        self.arcs_by_sender: List[List[int]] = [[] for _ in range(g.n)]
        self.recv_flats: List[int] = []
        for arc in g.comm_arcs:
            s, r = g.flat(arc.send), g.flat(arc.recv)
            self.partner[s], self.partner[r] = r, s
            i, j = arc.send.process, arc.recv.process
            self.sender_of[r] = i
            self.recv_proc_pool[r] = j
            if self.scheme is Scheme.RECEIVE:
                self.default_pool[r] = j
            elif self.scheme is Scheme.CHANNEL:
                self.default_pool[r] = chan_index[Channel(i, j)]
            else:
                self.default_pool[r] = i
            self.arcs_by_sender[i].append(r)
            self.recv_flats.append(r)
        self.mixed = self.scheme is Scheme.MIXED
        # receives whose candidate pools are all empty forever
        self.unbufferable = [False] * V
        for r in self.recv_flats:
            if self.mixed:
                self.unbufferable[r] = self.capacity[self.sender_of[r]] == 0 and self.capacity[self.recv_proc_pool[r]] == 0
            else:
                self.unbufferable[r] = self.capacity[self.default_pool[r]] == 0
        self.initial_codes = bytes(GREEN if k == _K_START else RED for k in self.kind)
        self.initial_heads = tuple(g.offsets[i] + 1 for i in range(g.n))

    # -- bookkeeping ----------------------------------------------------------
    def token_owner(self, codes, r: int) -> int:
        c = codes[r]
        if c == BUF:
            return self.default_pool[r]
        if c == BUF_RECV:
            return self.recv_proc_pool[r]
        return -1

    def free_from_codes(self, codes) -> List[int]:
        free = list(self.capacity)
        for r in self.recv_flats:
            owner = self.token_owner(codes, r)
            if owner >= 0:
                free[owner] -= 1
        return free

    def heads_from_codes(self, codes) -> List[int]:
        heads = []
        g = self.graph
        for i in range(g.n):
            base = g.offsets[i]
            end = base + g.end_position(i)
            h = base
            while h <= end and codes[h] == GREEN:
                h += 1
            heads.append(h if h <= end else -1)
        return heads

    # -- rules -------------------------------------------------------------
    def buffer_options(self, codes, free, r: int) -> List[_IMove]:
        if not self.mixed:
            p = self.default_pool[r]
            return [(Rule.RecvBufYel, r, p, -1)] if free[p] > 0 else []
        i, j = self.sender_of[r], self.recv_proc_pool[r]
        if free[i] > 0:
            return [(Rule.RecvBufYel, r, i, -1)]
        if free[j] > 0:
            return [(Rule.RecvBufYel, r, j, -1)]
        out = []
        for r2 in self.arcs_by_sender[i]:
            if codes[r2] == BUF and free[self.recv_proc_pool[r2]] > 0:
                out.append((Rule.RecvBufYel, r, i, r2))
        return out

    def can_buffer(self, codes, free, r: int) -> bool:
        if not self.mixed:
            return free[self.default_pool[r]] > 0
        i, j = self.sender_of[r], self.recv_proc_pool[r]
        if free[i] > 0 or free[j] > 0:
            return True
        for r2 in self.arcs_by_sender[i]:
            if codes[r2] == BUF and free[self.recv_proc_pool[r2]] > 0:
                return True
        return False

    def moves(self, codes, free, heads) -> List[_IMove]:
        kind, partner = self.kind, self.partner
        out: List[_IMove] = []
        for h in heads:
            if h < 0:
                continue
            k = kind[h]
            c = codes[h]
            if c == RED:
                if k == _K_SEND:
                    out.append((Rule.SendYel, h, -1, -1))
                elif k == _K_END:
                    out.append((Rule.EndYel, h, -1, -1))
                elif codes[partner[h]] == YELLOW:
                    out.append((Rule.RecvYel, h, -1, -1))
                    out.extend(self.buffer_options(codes, free, h))
            elif k == _K_SEND:
                r = partner[h]
                cr = codes[r]
                if cr != RED:
                    if cr != GREEN:
                        out.append((Rule.SendGrn, h, -1, -1))
                elif heads[self.proc[r]] != r:
                    out.extend(self.buffer_options(codes, free, r))
            elif k == _K_RECV:
                if codes[partner[h]] == GREEN:
                    out.append((Rule.RecvGrn, h, -1, -1))
            else:
                out.append((Rule.EndGrn, h, -1, -1))
        return out

    def blocked_send(self, codes, free, heads) -> int:
        """Flat id of a yellow send whose red receive cannot be buffered, or -1."""
        for h in heads:
            if h >= 0 and self.kind[h] == _K_SEND and codes[h] == YELLOW:
                r = self.partner[h]
                if codes[r] == RED and not self.can_buffer(codes, free, r):
                    return h
        return -1

    def apply(self, codes, free, heads, mv: _IMove):
        rule, v, pool, swap = mv
        new = bytearray(codes)
        if rule == Rule.RecvBufYel:
            free = list(free)
            if swap >= 0:
                new[v] = BUF
                new[swap] = BUF_RECV
                free[self.recv_proc_pool[swap]] -= 1
            else:
                new[v] = BUF if pool == self.default_pool[v] else BUF_RECV
                free[pool] -= 1
        elif rule in (Rule.SendYel, Rule.RecvYel, Rule.EndYel):
            new[v] = YELLOW
        else:
            if rule == Rule.RecvGrn:
                owner = self.token_owner(codes, v)
                if owner >= 0:
                    free = list(free)
                    free[owner] += 1
            new[v] = GREEN
            heads = list(heads)
            heads[self.proc[v]] = v + 1 if v < self.last[v] else -1
        return bytes(new), free, heads

    # -- reduction -------------------------------------------------------------
    def eager_rules(self, target: "Target") -> frozenset:
        """Rules whose instances may be applied eagerly during search.

        SendGrn, EndYel and EndGrn touch neither tokens nor red receives, so
        they are safe for both targets.  For deadlock search SendYel is safe
        as well (it only enables moves), and so is RecvGrn except under the
        mixed scheme, where a returned token can change which lazy option
        applies.  RecvYel is safe for deadlock search on receives that can
        never take a token (see :attr:`unbufferable`).
        """
        rules = {Rule.SendGrn, Rule.EndYel, Rule.EndGrn}
        if Target(target) is Target.DEADLOCK:
            rules.add(Rule.SendYel)
            rules.add(Rule.RecvYel)
            if not self.mixed:
                rules.add(Rule.RecvGrn)
        return frozenset(rules)

    def is_eager(self, mv: _IMove, rules: frozenset) -> bool:
        rule = mv[0]
        if rule not in rules:
            return False
        if rule == Rule.RecvYel:
            return self.unbufferable[mv[1]]
        return True

    # -- conversions -----------------------------------------------------------
    def to_move(self, mv: _IMove) -> Move:
        rule, v, pool, swap = mv
        token = None
        if rule == Rule.RecvBufYel:
            if swap >= 0:
                token = SwapVia(self.graph.vertex(swap), self.pool_keys[self.recv_proc_pool[swap]])
            else:
                token = TakeFrom(self.pool_keys[pool])
        return Move(Rule(rule), self.graph.vertex(v), token)

    def from_move(self, move: Move) -> _IMove:
        g = self.graph
        try:
            v = g.flat(VertexId(*move.vertex))
        except (IndexError, TypeError) as exc:
            raise IllegalMove(f"no vertex {move.vertex}") from exc
        pool, swap = -1, -1
        if isinstance(move.token, TakeFrom):
            key = move.token.pool
            if key not in self.pool_keys:
                raise IllegalMove(f"unknown pool {key}")
            pool = self.pool_keys.index(key)
        elif isinstance(move.token, SwapVia):
            swap = g.flat(VertexId(*move.token.other))
            pool = self.sender_of[v]
        return (int(move.rule), v, pool, swap)

    def state(self, codes, free) -> ColoringState:
        return ColoringState(bytes(codes), tuple(free), self)


def _game_for(g: CommGraph, b: BufferAssignment) -> Game:
    return Game(g, b)


# -- public single-step API -------------------------------------------------

def initial_state(g: CommGraph, b: BufferAssignment) -> ColoringState:
    game = _game_for(g, b)
    return game.state(game.initial_codes, game.capacity)


def enabled_moves(state: ColoringState, g: Optional[CommGraph] = None, b: Optional[BufferAssignment] = None) -> List[Move]:
    game = state.game if g is None else _match_game(state, g, b)
    codes = state.codes
    heads = game.heads_from_codes(codes)
    return [game.to_move(m) for m in game.moves(codes, state.pool_free, heads)]


def _match_game(state, g, b):
    if state.game.graph is g and (b is None or state.game.assignment == b):
        return state.game
    return _game_for(g, b if b is not None else state.game.assignment)


def apply_move(state: ColoringState, move: Move) -> ColoringState:
    game = state.game
    mv = game.from_move(move)
    heads = game.heads_from_codes(state.codes)
    legal = game.moves(state.codes, state.pool_free, heads)
    if mv not in legal:
        raise IllegalMove(f"{move} is not applicable in this colouring")
    codes, free, _ = game.apply(state.codes, state.pool_free, heads, mv)
    new = game.state(codes, free)
    assert check_conservation(new), "token conservation violated"
    return new


def check_conservation(state: ColoringState) -> bool:
    """pool_free[p] + tokens of p on arcs == capacity[p], and pools never negative."""
    game = state.game
    expected = game.free_from_codes(state.codes)
    return list(state.pool_free) == expected and all(x >= 0 for x in expected)


def is_blocked(state: ColoringState) -> bool:
    game = state.game
    heads = game.heads_from_codes(state.codes)
    return game.blocked_send(state.codes, state.pool_free, heads) >= 0


def is_deadlocked(state: ColoringState) -> bool:
    return not state.is_complete() and not enabled_moves(state)


def replay(g: CommGraph, b: BufferAssignment, moves: Iterable[Move]) -> ColoringState:
    """Apply ``moves`` from the initial colouring; raises IllegalMove on the first bad one."""
    state = initial_state(g, b)
    for k, move in enumerate(moves):
        try:
            state = apply_move(state, move)
        except IllegalMove as exc:
            raise IllegalMove(f"move {k + 1} ({move}): {exc}") from exc
    return state


def witness_exhibits(g: CommGraph, b: BufferAssignment, verdict: Verdict) -> bool:
    """Replay a verdict's witness and confirm its final state shows the outcome."""
    if verdict.witness is None:
        return verdict.outcome is Outcome.ALL_COMPLETE
    try:
        state = replay(g, b, verdict.witness)
    except IllegalMove:
        return False
    if verdict.outcome is Outcome.DEADLOCK_FOUND:
        return is_deadlocked(state)
    if verdict.outcome is Outcome.BLOCK_FOUND:
        return is_blocked(state)
    return state.is_complete()


# -- exhaustive search ---------------------------------------------------------

def explore(g: CommGraph, b: BufferAssignment, target=Target.DEADLOCK,
            limit: int = DEFAULT_STATE_LIMIT, reduce: bool = True) -> Verdict:
    """Depth-first search over every reachable colouring.

    ``Target.DEADLOCK``: find a maximal sequence ending with a non-green vertex.
    ``Target.BLOCK``: find a colouring with a yellow send whose red receive
    cannot take a token (even if the unbuffered receive rule would apply).

    With ``reduce`` set, moves that stay enabled until taken, never disable
    another move and cannot change the target predicate are applied at once
    (see :meth:`Game.eager_rules`).  Any sequence reaching a target state can
    be reordered to take them first, so verdicts are unchanged while
    interleavings of independent processes collapse.
    """
    target = Target(target)
    game = _game_for(g, b)
    eager = game.eager_rules(target) if reduce else None
    path: List[_IMove] = []

    def settle(codes, free, heads):
        moves = game.moves(codes, free, heads)
        if eager is None:
            return codes, free, heads, moves
        while True:
            for mv in moves:
                if game.is_eager(mv, eager):
                    codes, free, heads = game.apply(codes, free, heads, mv)
                    path.append(mv)
                    break
            else:
                return codes, free, heads, moves
            moves = game.moves(codes, free, heads)

    def found(codes, free, heads, moves):
        if target is Target.DEADLOCK:
            return not moves and any(h >= 0 for h in heads)
        return game.blocked_send(codes, free, heads) >= 0

    codes, free, heads, moves = settle(game.initial_codes, list(game.capacity), list(game.initial_heads))
    visited = {codes}
    if found(codes, free, heads, moves):
        return _verdict_found(game, target, path, len(visited))
    stack = [(codes, free, heads, iter(moves), 0)]
    while stack:
        codes, free, heads, it, base = stack[-1]
        mv = next(it, None)
        if mv is None:
            stack.pop()
            del path[base:]
            continue
        mark = len(path)
        path.append(mv)
        ncodes, nfree, nheads, nmoves = settle(*game.apply(codes, free, heads, mv))
        if ncodes in visited:
            del path[mark:]
            continue
        visited.add(ncodes)
        if len(visited) > limit:
            raise StateLimitExceeded(limit, len(visited))
        if found(ncodes, nfree, nheads, nmoves):
            return _verdict_found(game, target, path, len(visited))
        stack.append((ncodes, nfree, nheads, iter(nmoves), mark))
    return Verdict(Outcome.ALL_COMPLETE, None, len(visited))


def _verdict_found(game, target, path, explored) -> Verdict:
    outcome = Outcome.DEADLOCK_FOUND if target is Target.DEADLOCK else Outcome.BLOCK_FOUND
    return Verdict(outcome, tuple(game.to_move(m) for m in path), explored)


def maximal_green_sets(g: CommGraph, b: BufferAssignment, limit: int = DEFAULT_STATE_LIMIT) -> set:
    """Green-vertex sets of every terminal colouring (used by confluence checks)."""
    game = _game_for(g, b)
    start = (game.initial_codes, list(game.capacity), list(game.initial_heads))
    visited = {start[0]}
    results = set()
    stack = [start]
    while stack:
        codes, free, heads = stack.pop()
        moves = game.moves(codes, free, heads)
        if not moves:
            results.add(frozenset(k for k, c in enumerate(codes) if c == GREEN))
        for mv in moves:
            nxt = game.apply(codes, free, heads, mv)
            if nxt[0] not in visited:
                visited.add(nxt[0])
                if len(visited) > limit:
                    raise StateLimitExceeded(limit, len(visited))
                stack.append(nxt)
    return results


# -- greedy single schedule -------------------------------------------------------

_PRIORITY = (Rule.RecvGrn, Rule.SendGrn, Rule.RecvYel, Rule.RecvBufYel, Rule.SendYel, Rule.EndYel, Rule.EndGrn)


def run_greedy(g: CommGraph, b: BufferAssignment) -> Verdict:
    """Run one deterministic maximal colouring sequence.

    A FIFO worklist holds vertices whose rules may have become applicable;
    each popped vertex takes its highest-priority applicable rule.  Under the
    channel scheme the result decides sufficiency.
    """
    game = _game_for(g, b)
    kind, partner, proc = game.kind, game.partner, game.proc
    codes = bytearray(game.initial_codes)
    free = list(game.capacity)
    heads = list(game.initial_heads)
    queue = deque(heads)
    queued = set(heads)
    waiting: List[int] = []  # red receives whose send is yellow but no token was available
    sequence: List[_IMove] = []

    def push(v):
        if 0 <= v < len(codes) and v not in queued:
            queued.add(v)
            queue.append(v)

    def choose(v) -> Optional[_IMove]:
        c = codes[v]
        k = kind[v]
        is_head = heads[proc[v]] == v
        if c == GREEN:
            return None
        if k == _K_RECV:
            s = partner[v]
            if c != RED:
                return (Rule.RecvGrn, v, -1, -1) if is_head and codes[s] == GREEN else None
            if codes[s] != YELLOW:
                return None
            if is_head:
                return (Rule.RecvYel, v, -1, -1)
            opts = game.buffer_options(codes, free, v)
            if not opts:
                waiting.append(v)
                return None
            return opts[0]
        if not is_head:
            return None
        if k == _K_SEND:
            if c == RED:
                return (Rule.SendYel, v, -1, -1)
            return (Rule.SendGrn, v, -1, -1) if codes[partner[v]] not in (RED, GREEN) else None
        return (Rule.EndYel if c == RED else Rule.EndGrn, v, -1, -1)

    while queue:
        v = queue.popleft()
        queued.discard(v)
        mv = choose(v)
        if mv is None:
            continue
        before = list(free)
        new_codes, free, heads = game.apply(codes, free, heads, mv)
        codes = bytearray(new_codes)
        sequence.append(mv)
        push(v)
        if v < game.last[v]:
            push(v + 1)
        if partner[v] >= 0:
            push(partner[v])
        if mv[3] >= 0:
            push(mv[3])
        if free != before and waiting:
            pending, waiting[:] = list(waiting), []
            for w in pending:
                push(w)
    explored = len(sequence) + 1
    if all(h < 0 for h in heads):
        return Verdict(Outcome.ALL_COMPLETE, tuple(game.to_move(m) for m in sequence), explored)
    return Verdict(Outcome.DEADLOCK_FOUND, tuple(game.to_move(m) for m in sequence), explored)
