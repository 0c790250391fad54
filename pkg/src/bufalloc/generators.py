"""Fixture graphs: t-rings, the pipe-and-roll mesh, fans and random traces."""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import List, Tuple

from .errors import BadArity
from .graph import RECV, SEND, CommGraph


def gen_tring(t: int) -> CommGraph:
    """t processes; process k sends to k+1 and then receives from k-1."""
    if t < 2:
        raise BadArity(f"a ring needs at least 2 processes, got {t}")
    names = [f"P{k}" for k in range(t)]
    events = [[(SEND, f"m{k}"), (RECV, f"m{(k - 1) % t}")] for k in range(t)]
    return CommGraph(names, events)


def gen_fan(n: int) -> CommGraph:
    """P0 sends n messages to P1, which receives them in the same order."""
    if n < 1:
        raise BadArity(f"a fan needs at least one message, got {n}")
    return CommGraph(["P0", "P1"], [[(SEND, f"m{k}") for k in range(n)], [(RECV, f"m{k}") for k in range(n)]])


def gen_fox_mesh(p: int) -> CommGraph:
    """Pipe-and-roll matrix multiplication on a p x p worker mesh.

    Event order (workers are numbered row-major, w1 = (0,0)):

    * control sends one block to every worker in order, then receives one
      result from every worker in the same order;
    * worker (i,j) receives its block, then runs p rounds.  In round k the
      worker (i, (i+k) mod p) sends its A block to the other members of row
      i, in order (j+1, j+2, ...) mod p; the others receive it.  Then every
      worker sends its B block up to ((i-1) mod p, j) and receives the next
      one from ((i+1) mod p, j);
    * finally each worker sends its C block to control.
    """
    if p < 2:
        raise BadArity(f"the mesh needs p >= 2, got {p}")
    workers = [(i, j) for i in range(p) for j in range(p)]
    wname = {w: f"w{k + 1}" for k, w in enumerate(workers)}
    names = ["control"] + [wname[w] for w in workers]
    ev = {w: [] for w in workers}
    control: List[Tuple[str, str]] = []
    for w in workers:
        m = f"init>{wname[w]}"
        control.append((SEND, m))
        ev[w].append((RECV, m))
    for k in range(p):
        for (i, j) in workers:
            b = (i + k) % p
            if j == b:
                for d in range(1, p):
                    dst = (i, (j + d) % p)
                    ev[(i, j)].append((SEND, f"A{k}:{wname[(i, j)]}>{wname[dst]}"))
            else:
                ev[(i, j)].append((RECV, f"A{k}:{wname[(i, b)]}>{wname[(i, j)]}"))
        for (i, j) in workers:
            up, down = ((i - 1) % p, j), ((i + 1) % p, j)
            ev[(i, j)].append((SEND, f"B{k}:{wname[(i, j)]}>{wname[up]}"))
            ev[(i, j)].append((RECV, f"B{k}:{wname[down]}>{wname[(i, j)]}"))
    for w in workers:
        m = f"C>{wname[w]}"
        ev[w].append((SEND, m))
        control.append((RECV, m))
    return CommGraph(names, [control] + [ev[w] for w in workers])


@dataclass(frozen=True)
class RandomTraceParams:
    processes: int
    events_per_process: int
    seed: int = 0
    fifo: bool = False
    send_bias: float = 0.5


def gen_random(params: RandomTraceParams) -> CommGraph:
    """Seeded random trace, causally acyclic by construction.

    Event slots of all processes are shuffled into one global order.  A
    slot becomes a send or, with probability ``1 - send_bias``, a receive
    matched to a random earlier unmatched send of another process (a send
    if there is none).  Unmatched sends are dropped at the end.  With
    ``fifo`` a receive always takes the earliest pending send of the chosen
    sender, so each channel delivers in send order.
    """
    if params.processes < 1 or params.events_per_process < 0:
        raise BadArity("need at least one process and a nonnegative event count")
    rng = random.Random(params.seed)
    n = params.processes
    counts = [rng.randint(1, params.events_per_process) if params.events_per_process else 0 for _ in range(n)]
    order = [p for p in range(n) for _ in range(counts[p])]
    rng.shuffle(order)
    events: List[List[List[str]]] = [[] for _ in range(n)]
    pending: List[List[Tuple[int, int]]] = [[] for _ in range(n)]  # per sender: (slot, msg id)
    matched = set()
    next_msg = 0
    for p in order:
        senders = [q for q in range(n) if q != p and pending[q]]
        if senders and rng.random() >= params.send_bias:
            q = rng.choice(senders)
            k = 0 if params.fifo else rng.randrange(len(pending[q]))
            _, mid = pending[q].pop(k)
            matched.add(mid)
            events[p].append([RECV, f"m{mid}"])
        else:
            events[p].append([SEND, f"m{next_msg}"])
            pending[p].append((len(events[p]) - 1, next_msg))
            next_msg += 1
    cleaned = [[(k, m) for k, m in evs if k == RECV or int(m[1:]) in matched] for evs in events]
    return CommGraph([f"P{k}" for k in range(n)], cleaned)
