"""Command-line entry point.

Exit codes: 0 yes (safe, sufficient, block-free, valid), 1 no, 2 usage or
input error, 3 state limit exceeded.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from typing import List, Optional

from . import __version__
from .analysis import bap_min, bsp, intervals, nbap, nbap_mixed_min
from .coloring import (DEFAULT_STATE_LIMIT, BufferAssignment, Outcome, Scheme, Target, explore,
                       is_blocked, is_deadlocked, replay)
from .errors import BufallocError, IllegalMove, StateLimitExceeded
from .formats import (FORMAT_VERSION, assignment_from_doc, assignment_to_doc, dump, format_witness,
                      load_graph, parse_witness, read_json, read_text, trace_document, verdict_to_doc)
from .generators import RandomTraceParams, gen_fan, gen_fox_mesh, gen_random, gen_tring
from .graph import dependency_graph, is_dep_acyclic, to_dot
from .reductions import REDUCTIONS, expand_channel_tokens, parse_dimacs, receive_to_mixed

EXIT_YES, EXIT_NO, EXIT_INPUT, EXIT_LIMIT = 0, 1, 2, 3
SCHEMES = [s.value for s in Scheme]


def _err(msg: str) -> None:
    print(f"bufalloc: {msg}", file=sys.stderr)


def _out(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _load_assignment(path: str, g, scheme: str) -> BufferAssignment:
    return assignment_from_doc(read_json(path), g, scheme)


def _witness_text(verdict, g, b, target: Target) -> str:
    header = {
        "target": target.value,
        "outcome": verdict.outcome.value,
        "scheme": b.scheme.value,
        "assignment": json.dumps(assignment_to_doc(g, b), separators=(",", ":")),
    }
    return format_witness(verdict.witness or (), header)


def _verdict_exit(verdict) -> int:
    return EXIT_YES if verdict.outcome is Outcome.ALL_COMPLETE else EXIT_NO


# -- subcommands ----------------------------------------------------------------

def cmd_validate(args) -> int:
    g = load_graph(args.trace)
    acyclic = is_dep_acyclic(dependency_graph(g))
    report = {
        "format": FORMAT_VERSION, "valid": True, "processes": g.n,
        "vertices": g.num_vertices, "messages": len(g.comm_arcs),
        "channels": len(g.channels), "dependency_acyclic": acyclic,
    }
    if args.json:
        _out(dump(report))
    else:
        _out(f"valid: {g.n} processes, {len(g.comm_arcs)} messages, {len(g.channels)} channels; "
             f"dependency graph {'acyclic' if acyclic else 'cyclic'}")
    return EXIT_YES


def cmd_nbap(args) -> int:
    g = load_graph(args.trace)
    t0 = time.perf_counter()
    report = {"format": FORMAT_VERSION, "command": "nbap", "scheme": args.scheme}
    if args.scheme == Scheme.MIXED.value:
        _, b = nbap_mixed_min(g, args.limit)
        table = None
    else:
        ivs = intervals(g, args.scheme)
        b = ivs.assignment()
        table = ivs if args.intervals else None
    report["assignment"] = assignment_to_doc(g, b)
    report["wall_time_s"] = round(time.perf_counter() - t0, 6)
    if table is not None:
        report["overlaps"] = {_pool_name(g, p): table.overlaps(p) for p in table.pools}
        report["intervals"] = {
            _pool_name(g, p): [[iv.start, iv.stop] for iv in table.intervals[p]] for p in table.pools
        }
    if args.json:
        _out(dump(report))
    else:
        _out(dump(report["assignment"]))
        if table is not None:
            for p in table.pools:
                row = " ".join(str(x) for x in table.overlaps(p))
                _out(f"{_pool_name(g, p)}: {row}")
    return EXIT_YES


def _pool_name(g, pool) -> str:
    if isinstance(pool, tuple):
        return f"{g.names[pool[0]]}>{g.names[pool[1]]}"
    return g.names[pool]


def _check_report(command, g, b, target, verdict, t0, args) -> int:
    elapsed = round(time.perf_counter() - t0, 6)
    if args.witness_out and verdict.witness is not None:
        with open(args.witness_out, "w", encoding="utf-8") as fh:
            fh.write(_witness_text(verdict, g, b, target))
    if args.json:
        report = {"format": FORMAT_VERSION, "command": command, "target": target.value,
                  "scheme": b.scheme.value, "assignment": assignment_to_doc(g, b),
                  **verdict_to_doc(verdict), "wall_time_s": elapsed}
        _out(dump(report))
    else:
        _out(f"{verdict.outcome.value} ({verdict.states_explored} states, {elapsed:.3f}s)")
        if verdict.witness is not None:
            _out(_witness_text(verdict, g, b, target))
    return _verdict_exit(verdict)


def cmd_bsp(args) -> int:
    g = load_graph(args.trace)
    b = _load_assignment(args.assignment, g, args.scheme)
    t0 = time.perf_counter()
    verdict = bsp(g, b, args.limit)
    return _check_report("bsp", g, b, Target.DEADLOCK, verdict, t0, args)


def cmd_explore(args) -> int:
    g = load_graph(args.trace)
    b = _load_assignment(args.assignment, g, args.scheme)
    target = Target(args.target)
    t0 = time.perf_counter()
    verdict = explore(g, b, target, args.limit, reduce=not args.no_reduce)
    return _check_report("explore", g, b, target, verdict, t0, args)


def cmd_bap(args) -> int:
    g = load_graph(args.trace)
    t0 = time.perf_counter()
    res = bap_min(g, args.scheme, args.limit, args.max_total)
    report = {
        "format": FORMAT_VERSION, "command": "bap", "scheme": args.scheme, "k": res.k,
        "assignment": assignment_to_doc(g, res.assignment),
        "lower_bound": res.lower_bound, "upper_bound": res.upper_bound,
        "candidates_checked": res.candidates_checked,
        "certificate": {
            _pool_name(g, key): [str(m) for m in wit] for key, wit in res.certificate.witnesses.items()
        },
        "wall_time_s": round(time.perf_counter() - t0, 6),
    }
    if args.json:
        _out(dump(report))
    else:
        _out(f"k = {res.k}")
        _out(dump(report["assignment"]))
        for pool, wit in report["certificate"].items():
            _out(f"with one token fewer at {pool}: deadlock after {len(wit)} moves")
    return EXIT_YES


def cmd_replay(args) -> int:
    g = load_graph(args.trace)
    moves, header = parse_witness(read_text(args.witness))
    if args.assignment:
        b = _load_assignment(args.assignment, g, args.scheme or header.get("scheme"))
    elif "assignment" in header:
        b = assignment_from_doc(json.loads(header["assignment"]), g, args.scheme)
    else:
        _err("no assignment: pass --assignment or use a witness with an assignment header")
        return EXIT_INPUT
    try:
        state = replay(g, b, moves)
    except IllegalMove as exc:
        _out(f"rejected: {exc}")
        return EXIT_NO
    wanted = header.get("outcome")
    checks = {
        Outcome.DEADLOCK_FOUND.value: is_deadlocked,
        Outcome.BLOCK_FOUND.value: is_blocked,
        Outcome.ALL_COMPLETE.value: lambda s: s.is_complete(),
    }
    if wanted in checks and not checks[wanted](state):
        _out(f"rejected: final state does not show {wanted}")
        return EXIT_NO
    _out(f"accepted: {len(moves)} moves" + (f", final state shows {wanted}" if wanted else ""))
    return EXIT_YES


def cmd_reduce(args) -> int:
    formula = parse_dimacs(read_text(args.formula))
    red = REDUCTIONS[args.kind](formula)
    doc = trace_document(red.graph)
    fixture = {"kind": red.kind, "scheme": red.scheme.value, "k": red.k}
    if red.fixed is not None:
        fixture["assignment"] = assignment_to_doc(red.graph, red.fixed)
    doc["fixture"] = fixture
    _out(dump(doc))
    return EXIT_YES


def cmd_transform(args) -> int:
    g = load_graph(args.trace)
    if args.kind == "expand-channel":
        if not args.assignment:
            _err("expand-channel needs --assignment")
            return EXIT_INPUT
        b = _load_assignment(args.assignment, g, Scheme.CHANNEL.value)
        g2, b2 = expand_channel_tokens(g, b)
        doc = trace_document(g2)
        doc["fixture"] = {"kind": "expand-channel", "scheme": "channel", "assignment": assignment_to_doc(g2, b2)}
    else:
        doc = trace_document(receive_to_mixed(g))
    _out(dump(doc))
    return EXIT_YES


def cmd_gen(args) -> int:
    if args.family == "tring":
        g = gen_tring(args.size)
    elif args.family == "fox":
        g = gen_fox_mesh(args.size)
    elif args.family == "fan":
        g = gen_fan(args.size)
    else:
        g = gen_random(RandomTraceParams(args.processes, args.events, args.seed, args.fifo, args.send_bias))
    _out(dump(trace_document(g)))
    return EXIT_YES


def cmd_export_dot(args) -> int:
    _out(to_dot(load_graph(args.trace)))
    return EXIT_YES


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bufalloc", description="Buffer-allocation analysis of message-passing traces.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def trace_arg(sp, optional=False):
        if optional:
            sp.add_argument("trace", nargs="?", default="-", help="trace JSON (default: stdin)")
        else:
            sp.add_argument("trace", help="trace JSON, or - for stdin")

    def common(sp, scheme=True, limit=True):
        if scheme:
            sp.add_argument("--scheme", choices=SCHEMES, default=Scheme.RECEIVE.value)
        if limit:
            sp.add_argument("--limit", type=int, default=DEFAULT_STATE_LIMIT, help="state limit for exhaustive search")
        sp.add_argument("--json", action="store_true", help="machine-readable report on stdout")

    sp = sub.add_parser("validate", help="check trace invariants")
    trace_arg(sp)
    common(sp, scheme=False, limit=False)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("nbap", help="minimal block-free assignment")
    trace_arg(sp, optional=True)
    common(sp)
    sp.add_argument("--intervals", action="store_true", help="print the per-position overlap table")
    sp.set_defaults(func=cmd_nbap)

    for name, func, doc in (("bsp", cmd_bsp, "is an assignment sufficient?"),
                            ("explore", cmd_explore, "raw state-space search")):
        sp = sub.add_parser(name, help=doc)
        trace_arg(sp)
        sp.add_argument("assignment", help="assignment JSON")
        common(sp)
        sp.add_argument("--witness-out", metavar="FILE", help="write the witness to FILE")
        if name == "explore":
            sp.add_argument("--target", choices=[t.value for t in Target], default=Target.DEADLOCK.value)
            sp.add_argument("--no-reduce", action="store_true", help="disable the eager-move reduction")
        sp.set_defaults(func=func)

    sp = sub.add_parser("bap", help="minimal safe assignment")
    trace_arg(sp, optional=True)
    common(sp)
    sp.add_argument("--max-total", type=int, default=None, help="give up above this many tokens")
    sp.set_defaults(func=cmd_bap)

    sp = sub.add_parser("replay", help="re-validate a witness")
    trace_arg(sp)
    sp.add_argument("witness")
    sp.add_argument("--assignment", help="assignment JSON (default: the witness header)")
    sp.add_argument("--scheme", choices=SCHEMES, default=None)
    sp.set_defaults(func=cmd_replay)

    sp = sub.add_parser("reduce", help="build a hardness fixture from a formula")
    sp.add_argument("kind", choices=sorted(REDUCTIONS))
    sp.add_argument("formula", help="DIMACS-like cnf/dnf file, or -")
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("transform", help="graph transforms")
    sp.add_argument("kind", choices=["expand-channel", "recv-to-mixed"])
    trace_arg(sp)
    sp.add_argument("--assignment", help="channel assignment (expand-channel)")
    sp.set_defaults(func=cmd_transform)

    sp = sub.add_parser("gen", help="fixture generators")
    sp.add_argument("family", choices=["tring", "fox", "fan", "random"])
    sp.add_argument("size", type=int, nargs="?", default=None, help="N for tring/fan, P for fox")
    sp.add_argument("--processes", type=int, default=3)
    sp.add_argument("--events", type=int, default=3, help="maximum events per process")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--fifo", action="store_true")
    sp.add_argument("--send-bias", type=float, default=0.5)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("export-dot", help="Graphviz rendering")
    trace_arg(sp)
    sp.set_defaults(func=cmd_export_dot)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "gen" and args.family != "random" and args.size is None:
        _err(f"gen {args.family} needs a size")
        return EXIT_INPUT
    try:
        return args.func(args)
    except StateLimitExceeded as exc:
        _err(str(exc))
        if getattr(args, "json", False):
            _out(dump({"format": FORMAT_VERSION, "command": args.command, "outcome": "unknown",
                       "states_explored": exc.explored, "limit": exc.limit}))
        return EXIT_LIMIT
    except (BufallocError, ValueError, OSError, json.JSONDecodeError) as exc:
        _err(str(exc))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
