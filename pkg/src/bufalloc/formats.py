"""JSON documents and the line-oriented witness format."""
from __future__ import annotations

import json
import sys
from typing import Dict, Iterable, List, Optional

from .coloring import BufferAssignment, Move, Rule, Scheme, SwapVia, TakeFrom, Verdict
from .errors import AssignmentShapeMismatch, TraceError
from .graph import Channel, CommGraph, VertexId, build_graph, to_document

FORMAT_VERSION = 1


def read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def read_json(path: str) -> dict:
    text = read_text(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TraceError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise TraceError(f"{path}: expected a JSON object")
    version = doc.get("format", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise TraceError(f"{path}: unsupported format version {version!r}")
    return doc


def load_graph(path: str) -> CommGraph:
    return build_graph(read_json(path))


def dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False)


# -- assignments ---------------------------------------------------------------

def assignment_to_doc(g: CommGraph, b: BufferAssignment) -> dict:
    doc = {"format": FORMAT_VERSION, "scheme": b.scheme.value}
    vec = b.vector(g)
    if b.scheme.per_process:
        doc["per_process"] = {name: vec[i] for i, name in enumerate(g.names)}
    else:
        doc["per_channel"] = [
            {"from": g.names[ch.src], "to": g.names[ch.dst], "tokens": m} for ch, m in zip(g.channels, vec)
        ]
    doc["total"] = b.total
    return doc


def assignment_from_doc(doc: dict, g: CommGraph, scheme: Optional[str] = None) -> BufferAssignment:
    try:
        declared = Scheme(doc.get("scheme", scheme))
    except ValueError as exc:
        raise AssignmentShapeMismatch(f"unknown scheme {doc.get('scheme')!r}") from exc
    if scheme is not None and Scheme(scheme) is not declared:
        raise AssignmentShapeMismatch(f"assignment is for the {declared.value} scheme, not {scheme}")
    index = {name: i for i, name in enumerate(g.names)}
    if declared.per_process:
        counts = doc.get("per_process")
        if not isinstance(counts, dict):
            raise AssignmentShapeMismatch("per_process must map process names to counts")
        if set(counts) != set(g.names):
            missing = sorted(set(g.names) - set(counts))
            extra = sorted(set(counts) - set(g.names))
            raise AssignmentShapeMismatch(f"per_process keys differ from the trace (missing {missing}, unknown {extra})")
        b = BufferAssignment.processes(declared, [_count(counts[name]) for name in g.names])
    else:
        entries = doc.get("per_channel")
        if not isinstance(entries, list):
            raise AssignmentShapeMismatch("per_channel must be a list of {from, to, tokens}")
        counts: Dict[Channel, int] = {}
        for e in entries:
            try:
                ch = Channel(index[e["from"]], index[e["to"]])
            except KeyError as exc:
                raise AssignmentShapeMismatch(f"unknown process in channel entry {e!r}") from exc
            counts[ch] = _count(e.get("tokens"))
        b = BufferAssignment.channels(counts)
    b.vector(g)
    return b


def _count(value) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise AssignmentShapeMismatch(f"token count must be a nonnegative integer, got {value!r}")
    return value


# -- witnesses ----------------------------------------------------------------

def _pool_text(pool) -> str:
    return str(Channel(*pool)) if isinstance(pool, tuple) else str(pool)


def _parse_pool(text: str):
    if ">" in text:
        a, b = text.split(">", 1)
        return Channel(int(a), int(b))
    return int(text)


def _parse_vertex(text: str) -> VertexId:
    proc, pos = text.split(":", 1)
    return VertexId(int(proc), int(pos))


def format_move(m: Move) -> str:
    line = f"{m.rule.name} {m.vertex.process}:{m.vertex.position}"
    if isinstance(m.token, TakeFrom):
        line += f" token {_pool_text(m.token.pool)}"
    elif isinstance(m.token, SwapVia):
        line += f" token {_pool_text(m.token.pool)} via {m.token.other.process}:{m.token.other.position}"
    return line


def format_witness(moves: Iterable[Move], header: Optional[Dict[str, str]] = None) -> str:
    lines = [f"# {k}: {v}" for k, v in (header or {}).items()]
    lines += [format_move(m) for m in moves]
    return "\n".join(lines) + "\n"


def parse_witness(text: str):
    """Return ``(moves, header)``; header lines look like ``# key: value``."""
    moves: List[Move] = []
    header: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if sep:
                header[key.strip()] = value.strip()
            continue
        parts = line.split()
        try:
            rule = Rule[parts[0]]
            vertex = _parse_vertex(parts[1])
            token = None
            if len(parts) > 2:
                if parts[2] != "token":
                    raise ValueError(f"expected 'token', got {parts[2]!r}")
                pool = _parse_pool(parts[3])
                if len(parts) == 6 and parts[4] == "via":
                    token = SwapVia(_parse_vertex(parts[5]), pool)
                elif len(parts) == 4:
                    token = TakeFrom(pool)
                else:
                    raise ValueError("trailing text")
        except (KeyError, IndexError, ValueError) as exc:
            raise TraceError(f"witness line {lineno}: cannot parse {line!r} ({exc})") from exc
        moves.append(Move(rule, vertex, token))
    return moves, header


# -- reports ---------------------------------------------------------------------

def verdict_to_doc(v: Verdict) -> dict:
    return {
        "outcome": v.outcome.value,
        "states_explored": v.states_explored,
        "witness": None if v.witness is None else [format_move(m) for m in v.witness],
    }


def trace_document(g: CommGraph) -> dict:
    return to_document(g)
