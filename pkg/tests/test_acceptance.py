"""One test per acceptance criterion; each records a PASS/FAIL line shown in the run summary."""
import math
import random
import time

import pytest

from bufalloc.analysis import bap_min, intervals, nbap, nbap_receive, nbap_send
from bufalloc.coloring import (BufferAssignment, Outcome, Scheme, Target, explore, maximal_green_sets,
                               run_greedy)
from bufalloc.generators import RandomTraceParams, gen_fan, gen_fox_mesh, gen_random, gen_tring
from bufalloc.graph import CommGraph, is_dep_acyclic
from bufalloc.errors import StateLimitExceeded
from bufalloc.reductions import Cnf3, Dnf3, expand_channel_tokens

from conftest import record
from oracles import reduction_holds, small_formulas


def test_01_rings_need_one_token():
    t0 = time.perf_counter()
    failures = []
    for t in range(2, 6):
        g = gen_tring(t)
        for scheme in Scheme:
            zero = BufferAssignment.zeros(g, scheme)
            if explore(g, zero).outcome is not Outcome.DEADLOCK_FOUND:
                failures.append((t, scheme.value, "zero"))
            for key in zero.pool_keys(g):
                if not explore(g, zero.with_count(key, 1)).ok:
                    failures.append((t, scheme.value, key))
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 1.0
    record(1, ok, f"t-rings 2..5 x 4 schemes, {len(failures)} failures, {elapsed:.2f}s (limit 1s)")
    assert ok, failures


def _graphs_small(count=1000):
    return [gen_random(RandomTraceParams(2 + s % 2, 3, seed=s)) for s in range(count)]


def test_02_zero_token_confluence():
    t0 = time.perf_counter()
    bad = []
    graphs = _graphs_small()
    for s, g in enumerate(graphs):
        if len(maximal_green_sets(g, BufferAssignment.zeros(g, "receive"))) != 1:
            bad.append(s)
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 30
    record(2, ok, f"{len(graphs)} graphs (<=3x3), {len(bad)} with several terminal green sets, {elapsed:.1f}s")
    assert ok, bad[:10]


def test_03_acyclic_dependency_safety():
    graphs = _graphs_small() + [gen_random(RandomTraceParams(4, 4, seed=s)) for s in range(1000, 1500)]
    acyclic = [g for g in graphs if is_dep_acyclic(g)]
    bad = [g for g in acyclic if not explore(g, BufferAssignment.zeros(g, "receive")).ok]
    ok = not bad and len(acyclic) > 0
    record(3, ok, f"{len(acyclic)} dependency-acyclic graphs of {len(graphs)}, {len(bad)} unsafe with zero tokens")
    assert ok


def test_04_nbap_optimality():
    t0 = time.perf_counter()
    graphs = [gen_random(RandomTraceParams(2 + s % 3, 4, seed=2000 + s)) for s in range(200)]
    counter = []
    for k, g in enumerate(graphs):
        for scheme in ("receive", "send", "channel"):
            b = nbap(g, scheme)
            if not explore(g, b, Target.BLOCK).ok:
                counter.append((k, scheme, "not block-free"))
            for key, m in zip(b.pool_keys(g), b.vector(g)):
                if m and explore(g, b.with_count(key, m - 1), Target.BLOCK).ok:
                    counter.append((k, scheme, f"pool {key} reducible"))
    elapsed = time.perf_counter() - t0
    ok = not counter and elapsed < 300
    record(4, ok, f"{len(graphs)} graphs (<=4x4) x 3 schemes, {len(counter)} counterexamples, {elapsed:.1f}s")
    assert ok, counter[:10]


def _channel_instances(per_verdict=75, max_draws=20_000):
    """Seeded FIFO instances, drawn until both verdicts have ``per_verdict`` members."""
    buckets = {True: [], False: []}
    for s in range(max_draws):
        g = gen_random(RandomTraceParams(2 + s % 3, 3 + s % 3, seed=3000 + s, fifo=True, send_bias=0.7))
        rng = random.Random(s)
        b = BufferAssignment.channels({ch: rng.choice((0, 0, 1, 2)) for ch in g.channels})
        bucket = buckets[explore(g, b).ok]
        if len(bucket) < per_verdict:
            bucket.append((g, b))
        if all(len(v) == per_verdict for v in buckets.values()):
            break
    return buckets[True] + buckets[False]


_INSTANCES = []


def channel_instances():
    if not _INSTANCES:
        _INSTANCES.extend(_channel_instances())
    return _INSTANCES


def test_05_channel_greedy_equivalence():
    inst = channel_instances()
    mismatch = sum(run_greedy(g, b).outcome is not explore(g, b).outcome for g, b in inst)
    unsafe = sum(not explore(g, b).ok for g, b in inst)
    ok = mismatch == 0
    record(5, ok, f"{len(inst)} FIFO channel instances ({unsafe} insufficient), {mismatch} mismatches")
    assert ok


def test_06_channel_expansion():
    inst = channel_instances()
    mismatch = 0
    for g, b in inst:
        g2, zero = expand_channel_tokens(g, b)
        mismatch += explore(g, b).outcome is not explore(g2, zero).outcome
    ok = mismatch == 0
    record(6, ok, f"{len(inst)} instances expanded, {mismatch} verdict changes")
    assert ok


def _random_formulas(cls, count, seed):
    rng = random.Random(seed)
    return [cls(3, [[rng.choice((1, -1)) * rng.randint(1, 3) for _ in range(3)] for _ in range(rng.randint(1, 2))])
            for _ in range(count)]


@pytest.mark.parametrize("seed, kind", list(enumerate(["sat-bap-r", "dnf-bsp-r", "sat-bap-ch", "sat-nbap-sr"])))
def test_07_reduction_soundness(seed, kind):
    cls = Dnf3 if kind == "dnf-bsp-r" else Cnf3
    formulas = small_formulas(cls) + _random_formulas(cls, 50, seed=seed)
    t0 = time.perf_counter()
    wrong_yes = wrong_no = skipped = 0
    for f in formulas:
        try:
            truth, graph_side = reduction_holds(kind, f)
        except StateLimitExceeded:
            skipped += 1
            continue
        wrong_yes += graph_side and not truth
        wrong_no += truth and not graph_side
    elapsed = time.perf_counter() - t0
    ok = wrong_yes == wrong_no == 0
    detail = (f"{kind}: {len(formulas) - skipped} formulas checked ({skipped} over state limit), "
              f"{wrong_no} formula-true/graph-false, {wrong_yes} formula-false/graph-true, {elapsed:.1f}s")
    record(f"7 {kind}", ok, detail)
    assert ok, detail


def test_08_table_one():
    b2 = nbap_receive(gen_fox_mesh(2)).per_process
    row = intervals(gen_fox_mesh(2), "receive").overlaps(0)
    b3 = nbap_receive(gen_fox_mesh(3)).per_process
    b4 = nbap_receive(gen_fox_mesh(4)).per_process
    ok = (b2[0] == 4 and set(b2[1:]) == {3} and row == [0, 0, 0, 0, 4, 3, 2, 1, 0]
          and b3[0] == 9 and all(4 <= w <= 5 for w in b3[1:])
          and b4[0] == 16 and all(5 <= w <= 7 for w in b4[1:]))
    record(8, ok, f"p=2 {b2} row {row}; p=3 control {b3[0]} workers {min(b3[1:])}-{max(b3[1:])}; "
                  f"p=4 control {b4[0]} workers {min(b4[1:])}-{max(b4[1:])}")
    assert ok


def synthetic(vertices, processes=16, seed=0):
    """Messages between random process pairs in one global order (acyclic by construction)."""
    rng = random.Random(seed)
    events = [[] for _ in range(processes)]
    for k in range((vertices - 2 * processes) // 2):
        i, j = rng.sample(range(processes), 2)
        events[i].append(("send", f"m{k}"))
        events[j].append(("recv", f"m{k}"))
    return CommGraph([f"P{i}" for i in range(processes)], events)


def test_09_complexity_smoke():
    sizes = [10_000, 50_000, 100_000]
    times = []
    for v in sizes:
        g = synthetic(v)
        t0 = time.perf_counter()
        nbap_receive(g)
        times.append(time.perf_counter() - t0)
    slope = math.log(times[2] / times[0]) / math.log(sizes[2] / sizes[0])
    ok = times[2] < 5.0 and slope < 2.0
    record(9, ok, "nbap_receive on 16 processes: " +
           ", ".join(f"{v // 1000}k vertices {t:.2f}s" for v, t in zip(sizes, times)) +
           f"; log-log slope {slope:.2f} (limit 5s, slope < 2)")
    assert ok


def test_10_nbap_bounds_bap():
    g = gen_fan(5)
    k = {s.value: bap_min(g, s, max_total=5).k for s in Scheme}
    nb = nbap_send(g).total
    ok = all(v == 0 for v in k.values()) and nb == 5
    record(10, ok, f"fan(5): bap_min {k}, nbap_send total {nb}")
    assert ok
