"""Straightforward interpreter of the colouring rules, used as a test oracle.

States are (colours, tokens) where colours maps vertex -> "R"/"Y"/"G" and
tokens maps a receive vertex to the pool its buffer came from.  Only the
single-pool schemes are covered: receiver, sender or channel pool.
"""
from bufalloc.graph import VertexId


def pool_of(g, scheme, recv):
    send = g.partner[recv]
    if scheme == "receive":
        return recv.process
    if scheme == "send":
        return send.process
    return (send.process, recv.process)


def initial(g):
    colours = {v: ("G" if v.position == 0 else "R") for v in g.vertices()}
    return colours, {}


def freeze(state):
    colours, tokens = state
    return tuple(sorted(colours.items())), tuple(sorted(tokens.items()))


def free_tokens(g, scheme, caps, tokens):
    used = {}
    for r in tokens:
        p = pool_of(g, scheme, r)
        used[p] = used.get(p, 0) + 1
    return {p: caps.get(p, 0) - used.get(p, 0) for p in set(caps) | set(used)}


def successors(g, scheme, caps, state):
    colours, tokens = state
    free = free_tokens(g, scheme, caps, tokens)
    out = []

    def pred(v):
        return colours[VertexId(v.process, v.position - 1)]

    def moved(v, colour, tok=None, drop=False):
        c = dict(colours)
        c[v] = colour
        t = dict(tokens)
        if tok is not None:
            t[v] = tok
        if drop:
            t.pop(v, None)
        return c, t

    for v in g.vertices():
        kind, col = g.kind(v), colours[v]
        if kind == "send":
            r = g.partner[v]
            if col == "R" and pred(v) == "G":
                out.append(moved(v, "Y"))
            if col == "Y" and colours[r] == "Y":
                out.append(moved(v, "G"))
        elif kind == "recv":
            s = g.partner[v]
            if col == "R" and colours[s] == "Y":
                if pred(v) == "G":
                    out.append(moved(v, "Y"))
                p = pool_of(g, scheme, v)
                if free.get(p, 0) > 0:
                    out.append(moved(v, "Y", tok=p))
            if col == "Y" and pred(v) == "G" and colours[s] == "G":
                out.append(moved(v, "G", drop=True))
        elif kind == "end":
            if col == "R" and pred(v) == "G":
                out.append(moved(v, "Y"))
            if col == "Y":
                out.append(moved(v, "G"))
    return out


def blocked(g, scheme, caps, state):
    colours, tokens = state
    free = free_tokens(g, scheme, caps, tokens)
    for arc in g.comm_arcs:
        if colours[arc.send] == "Y" and colours[arc.recv] == "R":
            if free.get(pool_of(g, scheme, arc.recv), 0) <= 0:
                return True
    return False


def analyse(g, scheme, caps):
    """Exhaustive search: (deadlock reachable, block reachable, terminal green sets, all states)."""
    start = initial(g)
    seen = {freeze(start): start}
    stack = [start]
    deadlock = block = False
    terminals = set()
    while stack:
        st = stack.pop()
        if blocked(g, scheme, caps, st):
            block = True
        nxt = successors(g, scheme, caps, st)
        if not nxt:
            terminals.add(frozenset(v for v, c in st[0].items() if c == "G"))
            if any(c != "G" for c in st[0].values()):
                deadlock = True
        for s in nxt:
            key = freeze(s)
            if key not in seen:
                seen[key] = s
                stack.append(s)
    return deadlock, block, terminals, seen
