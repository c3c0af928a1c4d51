import io
import json
import socket
import threading
import time

import numpy as np
import pytest

from gazekit.controller import (
    BOX_PITCH, GREETING, HAND_PITCH, DropOldestQueue, GazeCommand, MalformedRecord,
    ControllerState, WireFrame, check_header, header_record, ingest, label_to_pose, open_source,
    parse_record, run_stream, scenario_to_wire,
)
from gazekit.core import Coarse5, Fine13, PersonState, Taxonomy, ValidationError
from gazekit.models import build_model


class StubModel:
    """Always predicts ``label``; remembers the windows it was shown."""

    def __init__(self, label):
        self.taxonomy = Taxonomy.FINE13 if isinstance(label, Fine13) else Taxonomy.COARSE5
        self.n_classes = self.taxonomy.size
        self.label = int(label)
        self.seen = []

    def forward(self, X):
        self.seen.append(np.array(X))
        p = np.zeros((1, self.n_classes))
        p[0, self.label] = 1.0
        return p


def _line(t, *persons):
    return json.dumps({"t": t, "persons": list(persons)})


P = {"present": 1, "distance": 1.5, "angle": -60.0}


def _frame(t=0, waving=(0, 0, 0, 0), present=(1, 1, 1, 1)):
    persons = []
    for slot, (w, pr) in enumerate(zip(waving, present)):
        persons.append(PersonState(1, 1.5, w, 0, 0, (-60.0, -30.0, 30.0, 60.0)[slot]) if pr else PersonState())
    return WireFrame(t, tuple(persons))


def test_parse_fills_missing_slots_and_accepts_names():
    f = ingest(_line(33, None, {**P, "angle": -20.0, "movement": "entering"}))
    assert f.t == 33 and not f.persons[0].present and not f.persons[3].present
    assert f.persons[1].angle == -20.0 and int(f.persons[1].movement) == 1
    assert parse_record(header_record()) == {"type": "header", "schema": "gazekit-wire", "version": 1}


@pytest.mark.parametrize("line", ["{", "[]", '{"persons": []}', '{"t": 1, "persons": {}}',
                                  '{"t": 1, "persons": [{"present": 1}]}', '{"type": "video", "t": 1}'])
def test_malformed_records(line):
    with pytest.raises(MalformedRecord):
        parse_record(line)


@pytest.mark.parametrize("line", [_line(0, P, P, P, P, P), _line(0, {**P, "waving": 3}),
                                  _line(0, {**P, "angle": 135.0})])
def test_invalid_records(line):
    with pytest.raises(ValidationError):
        parse_record(line)


def test_header_check():
    check_header({"schema": "gazekit-wire", "version": 1})
    with pytest.raises(ValidationError):
        check_header({"schema": "gazekit-wire", "version": 2})


def test_pose_mapping():
    f = WireFrame(0, (PersonState(1, 1.5, 0, 0, 0, -47.5), PersonState(), PersonState(), PersonState()))
    assert label_to_pose(Fine13.P1_BODY, f) == (-47.5, 0.0)
    assert label_to_pose(Fine13.P1_LEFT_HAND, f) == (-47.5, HAND_PITCH)
    assert label_to_pose(Coarse5.BOX, f) == (0.0, BOX_PITCH)
    # absent target falls back to the box
    assert label_to_pose(Fine13.P2_RIGHT_HAND, f) == (0.0, BOX_PITCH)


def test_warmup_then_prediction_from_previous_frames():
    model = StubModel(Fine13.P3_RIGHT_HAND)
    state = ControllerState(model)
    frames = [_frame(t) for t in range(0, 32 * 33, 33)]
    cmds = [state.step(f) for f in frames]
    assert [c.predicted for c in cmds] == [False] * 30 + [True] * 2
    assert cmds[0] == GazeCommand(0, 0.0, 0.0, "BOX", None, False)
    assert cmds[30].target == "P3_RIGHT_HAND" and cmds[30].yaw == 30.0 and cmds[30].pitch == HAND_PITCH
    # the command for frame 30 saw frames 0..29 only
    assert len(model.seen) == 2 and model.seen[0].shape == (30, 28)


def test_window_excludes_current_frame():
    model = StubModel(Coarse5.P1)
    state = ControllerState(model)
    for t in range(30):
        state.step(_frame(t, present=(1, 1, 1, 1)))
    state.step(_frame(30, present=(0, 1, 1, 1)))
    assert model.seen[0][:, 0].tolist() == [1.0] * 30
    cmd = state.step(_frame(31, present=(0, 1, 1, 1)))
    assert model.seen[1][-1, 0] == 0.0
    assert cmd.target == "BOX" and state.fallbacks == 2


def test_greeting_rising_edges_and_cooldown():
    state = ControllerState(StubModel(Coarse5.BOX), cooldown_ms=5000)
    script = [(0, (0, 0, 0, 0)), (100, (1, 0, 0, 0)), (200, (1, 0, 0, 0)), (300, (0, 0, 0, 0)),
              (400, (1, 0, 0, 0)), (1000, (1, 1, 0, 0)), (5100, (0, 0, 0, 0)), (5200, (0, 0, 1, 0)),
              (5300, (0, 0, 0, 0)), (6000, (1, 0, 0, 0))]
    said = [state.step(_frame(t, w)).say for t, w in script]
    # edges at 100, 400, 1000, 5200, 6000; only 100 and 5200 clear the cooldown
    assert said == [None, GREETING, None, None, None, None, None, GREETING, None, None]


def test_taxonomy_mismatch_rejected():
    with pytest.raises(ValidationError):
        ControllerState(StubModel(Coarse5.P1), taxonomy="fine13")


def test_run_stream_counts_and_skips():
    lines = [header_record(), "garbage", _line(0, P), _line(33, P, P, P, P, P), "", header_record()]
    lines += [_line(66 + 33 * i, P) for i in range(31)]
    out = io.StringIO()
    stats = run_stream(lines, out, StubModel(Coarse5.P1))
    cmds = [json.loads(x) for x in out.getvalue().splitlines()]
    assert stats.frames == stats.commands == 32 == len(cmds)
    assert (stats.neutral, stats.predicted) == (30, 2)
    assert stats.skipped == 3 and stats.invalid == 1
    assert cmds[-1] == {"t": 66 + 33 * 30, "yaw": -60.0, "pitch": 0.0, "target": "P1", "say": None,
                        "predicted": True}


def test_run_stream_rejects_foreign_header():
    bad = json.dumps({"type": "header", "schema": "other", "version": 1})
    with pytest.raises(ValidationError):
        run_stream([bad], io.StringIO(), StubModel(Coarse5.P1))


class FailingSink(io.StringIO):
    def __init__(self, after):
        super().__init__()
        self.after = after

    def write(self, s):
        if self.after == 0:
            raise BrokenPipeError("peer closed")
        self.after -= 1
        return super().write(s)


def test_sink_failure_ends_session_cleanly():
    stats = run_stream([_line(t, P) for t in range(10)], FailingSink(4), StubModel(Coarse5.P1))
    assert stats.commands == 4 and stats.frames == 5
    assert "peer closed" in stats.sink_error


def test_drop_oldest_queue():
    q = DropOldestQueue(2)
    for i in range(5):
        q.put(i)
    q.close()
    assert list(q) == [3, 4] and q.dropped == 3


def test_threaded_stream_matches_direct(canonical):
    wire = scenario_to_wire(canonical.frames[:60])
    model = build_model("lstm", "coarse5", seed=0)
    a, b = io.StringIO(), io.StringIO()
    run_stream(wire, a, model)
    stats = run_stream(iter(wire), b, model, queue_size=10_000)
    assert a.getvalue() == b.getvalue() and stats.dropped == 0


def _free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_tcp_source():
    port = _free_port()
    lines = [header_record()] + [_line(33 * i, P) for i in range(5)]

    def client():
        for _ in range(100):
            try:
                with socket.create_connection(("127.0.0.1", port)) as c:
                    c.sendall(("\n".join(lines) + "\n").encode())
                return
            except ConnectionRefusedError:
                time.sleep(0.02)

    threading.Thread(target=client, daemon=True).start()
    src = open_source(f"tcp://127.0.0.1:{port}")
    out = io.StringIO()
    stats = run_stream(src, out, StubModel(Coarse5.P1))
    assert stats.frames == 5 and len(out.getvalue().splitlines()) == 5


def test_scenario_wire_timestamps(canonical):
    wire = scenario_to_wire(canonical.frames[:4])
    assert [json.loads(x)["t"] for x in wire[1:]] == [0, 33, 66, 100]
    back = ingest(wire[1])
    assert back.persons == canonical.frames[0].persons
