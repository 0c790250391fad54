import io
import json

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from bufalloc.cli import main
from bufalloc.formats import (assignment_from_doc, assignment_to_doc, format_witness, parse_witness,
                              trace_document)
from bufalloc.coloring import BufferAssignment, Target, explore
from bufalloc.errors import AssignmentShapeMismatch, TraceError
from bufalloc.generators import gen_tring
from bufalloc.graph import build_graph

from conftest import small_graphs


def run(capsys, *argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr("sys.stdin", io.StringIO(stdin))
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def files(tmp_path):
    ring = tmp_path / "ring2.json"
    ring.write_text(json.dumps(trace_document(gen_tring(2))))
    zeros = tmp_path / "zeros.json"
    zeros.write_text(json.dumps({"format": 1, "scheme": "channel", "per_channel": []}))
    return tmp_path, ring, zeros


def test_bsp_channel_ring_insufficient(capsys, files):
    tmp, ring, zeros = files
    wit = tmp / "w.txt"
    code, out, _ = run(capsys, "bsp", "--scheme", "channel", ring, zeros, "--witness-out", wit)
    assert code == 1
    moves = [l for l in out.splitlines() if l and not l.startswith("#")]
    assert moves[1:] == ["SendYel 0:1", "SendYel 1:1"]
    code, out, _ = run(capsys, "replay", ring, wit)
    assert code == 0 and "DeadlockFound" in out


def test_nbap_fox_json(capsys, tmp_path):
    code, out, _ = run(capsys, "gen", "fox", 2)
    fox = tmp_path / "fox2.json"
    fox.write_text(out)
    code, out, _ = run(capsys, "nbap", "--scheme", "receive", fox, "--json")
    assert code == 0
    report = json.loads(out)
    assert report["assignment"]["per_process"] == {"control": 4, "w1": 3, "w2": 3, "w3": 3, "w4": 3}
    assert "wall_time_s" in report
    code, out, _ = run(capsys, "nbap", fox, "--intervals")
    assert "control: 0 0 0 0 4 3 2 1 0" in out


def test_reduce_pipe_into_bap(capsys, monkeypatch, tmp_path):
    cnf = tmp_path / "trivial.cnf"
    cnf.write_text("p cnf 1 1\n1 1 1 0\n")
    code, trace, _ = run(capsys, "reduce", "sat-bap-r", cnf)
    assert code == 0 and json.loads(trace)["fixture"]["k"] == 1
    code, out, _ = run(capsys, "bap", "--scheme", "receive", "--limit", 100000, "--json",
                       stdin=trace, monkeypatch=monkeypatch)
    assert code == 0
    report = json.loads(out)
    assert report["k"] == 1 and report["assignment"]["per_process"]["P_x1"] == 1


def test_reduce_dnf_fixture_runs(capsys, monkeypatch, tmp_path):
    dnf = tmp_path / "f.dnf"
    dnf.write_text("p dnf 1 2\n1 1 1 0\n-1 -1 -1 0\n")
    code, trace, _ = run(capsys, "reduce", "dnf-bsp-r", dnf)
    doc = json.loads(trace)
    a = tmp_path / "a.json"
    a.write_text(json.dumps(doc["fixture"]["assignment"]))
    t = tmp_path / "t.json"
    t.write_text(trace)
    assert run(capsys, "bsp", t, a)[0] == 0


def test_json_report_round_trips(capsys, files):
    tmp, ring, _ = files
    a = tmp / "a.json"
    a.write_text(json.dumps({"scheme": "receive", "per_process": {"P0": 1, "P1": 0}}))
    code, out, _ = run(capsys, "bsp", ring, a, "--json")
    report = json.loads(out)
    assert code == 0 and report["outcome"] == "AllComplete" and report["states_explored"] > 0
    again = tmp / "again.json"
    again.write_text(json.dumps(report["assignment"]))
    code2, out2, _ = run(capsys, "bsp", ring, again, "--json")
    assert code2 == code and json.loads(out2)["outcome"] == report["outcome"]


def test_replay_rejects_bad_witness(capsys, files):
    tmp, ring, zeros = files
    wit = tmp / "bad.txt"
    wit.write_text("SendGrn 0:1\n")
    assert run(capsys, "replay", ring, wit, "--assignment", zeros)[0] == 1
    wit.write_text("# outcome: DeadlockFound\nSendYel 0:1\n")
    assert run(capsys, "replay", ring, wit, "--assignment", zeros)[0] == 1


@pytest.mark.parametrize("argv", [
    ["validate", "missing.json"], ["frobnicate"], ["bsp", "--scheme", "nope", "x", "y"], ["gen", "tring"],
])
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_input_errors(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "validate", bad)[0] == 2
    bad.write_text(json.dumps({"processes": [{"name": "A", "events": [{"kind": "send", "msg": "m"}]}]}))
    code, _, err = run(capsys, "validate", bad)
    assert code == 2 and "no matching receive" in err
    bad.write_text(json.dumps({"format": 2, "processes": []}))
    assert run(capsys, "validate", bad)[0] == 2


def test_assignment_errors(capsys, files):
    tmp, ring, _ = files
    a = tmp / "a.json"
    a.write_text(json.dumps({"scheme": "receive", "per_process": {"P0": 1}}))
    assert run(capsys, "bsp", ring, a)[0] == 2
    a.write_text(json.dumps({"scheme": "send", "per_process": {"P0": 1, "P1": 0}}))
    assert run(capsys, "bsp", "--scheme", "receive", ring, a)[0] == 2


def test_state_limit_exit_code(capsys, files):
    tmp, ring, _ = files
    a = tmp / "a.json"
    a.write_text(json.dumps({"scheme": "receive", "per_process": {"P0": 1, "P1": 1}}))
    code, out, err = run(capsys, "explore", ring, a, "--no-reduce", "--limit", 2, "--json")
    assert code == 3 and "state limit" in err and json.loads(out)["outcome"] == "unknown"


def test_explore_block_target(capsys, files):
    tmp, ring, _ = files
    a = tmp / "a.json"
    a.write_text(json.dumps({"scheme": "receive", "per_process": {"P0": 1, "P1": 1}}))
    assert run(capsys, "explore", "--target", "block", ring, a)[0] == 0
    a.write_text(json.dumps({"scheme": "receive", "per_process": {"P0": 1, "P1": 0}}))
    assert run(capsys, "explore", "--target", "block", ring, a)[0] == 1


def test_transforms_and_exports(capsys, files):
    tmp, ring, _ = files
    a = tmp / "a.json"
    a.write_text(json.dumps({"scheme": "channel", "per_channel": [{"from": "P0", "to": "P1", "tokens": 2}]}))
    code, out, _ = run(capsys, "transform", "expand-channel", ring, "--assignment", a)
    assert code == 0 and build_graph(json.loads(out)).n == 4
    code, out, _ = run(capsys, "transform", "recv-to-mixed", ring)
    assert code == 0 and build_graph(json.loads(out)).n == 4
    code, out, _ = run(capsys, "export-dot", ring)
    assert code == 0 and out.startswith("digraph")
    code, out, _ = run(capsys, "validate", ring, "--json")
    assert json.loads(out)["dependency_acyclic"] is False
    code, out, _ = run(capsys, "gen", "random", "--processes", 3, "--events", 4, "--seed", 7, "--fifo")
    assert code == 0 and build_graph(json.loads(out)).n == 3


def test_mixed_nbap(capsys, files):
    _, ring, _ = files
    code, out, _ = run(capsys, "nbap", "--scheme", "mixed", ring, "--json")
    assert code == 0 and json.loads(out)["assignment"]["total"] == 2


def test_assignment_doc_round_trip():
    g = gen_tring(3)
    for b in (BufferAssignment.processes("mixed", [0, 2, 1]), BufferAssignment.channels({(0, 1): 1})):
        assert assignment_from_doc(assignment_to_doc(g, b), g).vector(g) == b.vector(g)
    with pytest.raises(AssignmentShapeMismatch):
        assignment_from_doc({"scheme": "channel", "per_channel": [{"from": "P0", "to": "Q", "tokens": 1}]}, g)
    with pytest.raises(AssignmentShapeMismatch):
        assignment_from_doc({"scheme": "receive", "per_process": {"P0": -1, "P1": 0, "P2": 0}}, g)


def test_witness_parse_errors():
    with pytest.raises(TraceError):
        parse_witness("Jump 0:1\n")
    with pytest.raises(TraceError):
        parse_witness("RecvBufYel 0:1 coin 2\n")


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(small_graphs(), st.sampled_from(["receive", "send", "mixed", "channel"]), st.sampled_from(list(Target)))
def test_replay_accepts_own_witnesses(capsys, tmp_path, g, scheme, target):
    t = tmp_path / "g.json"
    t.write_text(json.dumps(trace_document(g)))
    a = tmp_path / "a.json"
    a.write_text(json.dumps(assignment_to_doc(g, BufferAssignment.zeros(g, scheme))))
    w = tmp_path / "w.txt"
    if w.exists():
        w.unlink()
    code, _, _ = run(capsys, "explore", "--scheme", scheme, "--target", target.value, t, a, "--witness-out", w)
    if code == 1:
        assert run(capsys, "replay", t, w)[0] == 0
        moves, header = parse_witness(w.read_text())
        assert format_witness(moves, header) == w.read_text()
