import itertools

import pytest
from hypothesis import strategies as st

from bufalloc.generators import RandomTraceParams, gen_random
from bufalloc.graph import CommGraph, VertexId


def random_graph(seed, processes=3, events=3, fifo=False):
    return gen_random(RandomTraceParams(processes, events, seed=seed, fifo=fifo))


@st.composite
def small_graphs(draw, max_procs=3, max_events=3, fifo=None):
    n = draw(st.integers(2, max_procs))
    e = draw(st.integers(1, max_events))
    seed = draw(st.integers(0, 10**6))
    f = draw(st.booleans()) if fifo is None else fifo
    return gen_random(RandomTraceParams(n, e, seed=seed, fifo=f))


def brute_reach(g: CommGraph):
    """Reachability sets by plain DFS from every vertex."""
    out = {}
    for v in g.vertices():
        seen, stack = {v}, [v]
        while stack:
            u = stack.pop()
            for w in g.successors(u):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        out[v] = seen
    return out


def ring_graph():
    return CommGraph(["A", "B"], [[("send", "a"), ("recv", "b")], [("send", "b"), ("recv", "a")]])


def single_arc():
    return CommGraph(["A", "B"], [[("send", "m")], [("recv", "m")]])


@pytest.fixture
def ring2():
    return ring_graph()


ACCEPTANCE = {}


def record(criterion, ok, detail):
    ACCEPTANCE[criterion] = (ok, detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE, key=lambda k: (int(str(k).split()[0]), str(k))):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
