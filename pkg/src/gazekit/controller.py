"""Streaming gaze controller: NDJSON frames in, head-pose commands out.

Each input line is one JSON record. An optional first record
``{"type": "header", "schema": "gazekit-wire", "version": 1}`` pins the
schema; frame records look like::

    {"type": "frame", "t": 1033, "persons": [null, {"present": 1, "distance": 1.5,
     "waving": 0, "pointing": 0, "talking": 1, "angle": -30, "movement": 0}, null, null]}

The list position is the person slot (home bearings -60, -30, 30, 60);
missing trailing slots and ``null`` entries are absent persons. Every
accepted frame yields exactly one command line (see ``GazeCommand``).
"""
from __future__ import annotations

import collections
import json
import logging
import socket
import sys
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .core import (
    N_PERSONS, WINDOW, Movement, PersonState, SceneFrame, Taxonomy, ValidationError,
    encode_frame, index_label, is_hand, label_person,
)

log = logging.getLogger(__name__)

WIRE_SCHEMA = "gazekit-wire"
WIRE_VERSION = 1
GREETING = "Hello"
GREETING_COOLDOWN_MS = 5000
HAND_PITCH = -10.0
BOX_PITCH = -15.0
YAW_LIMIT = 90.0
FRAME_BUDGET_MS = 1000.0 / 30.0

class MalformedRecord(ValueError):
    """A wire line that cannot be parsed; counted and skipped."""


@dataclass(frozen=True)
class WireFrame:
    t: int
    persons: tuple  # 4 PersonState

    def scene(self, index: int = 0) -> SceneFrame:
        return SceneFrame(index, self.persons)

    def features(self) -> np.ndarray:
        return encode_frame(self.scene(), strict_bearing=False)


@dataclass(frozen=True)
class GazeCommand:
    t: int
    yaw: float
    pitch: float
    target: str
    say: str | None = None
    predicted: bool = False

    def to_json(self) -> str:
        rec = {"t": self.t, "yaw": round(self.yaw, 6), "pitch": self.pitch, "target": self.target,
               "say": self.say, "predicted": self.predicted}
        return json.dumps(rec, sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------- ingest

def _parse_person(raw, slot: int) -> PersonState:
    if raw is None:
        return PersonState()
    if not isinstance(raw, dict):
        raise MalformedRecord(f"persons[{slot}] is not an object")
    try:
        present = int(raw.get("present", 1))
        if not present:
            return PersonState()
        movement = raw.get("movement", 0)
        movement = Movement[movement.upper()] if isinstance(movement, str) else Movement(int(movement))
        return PersonState(
            present=1,
            distance=float(raw["distance"]),
            waving=int(raw.get("waving", 0)),
            pointing=int(raw.get("pointing", 0)),
            talking=int(raw.get("talking", 0)),
            angle=float(raw["angle"]),
            movement=movement,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedRecord(f"persons[{slot}]: {exc}") from None


def parse_record(line: str):
    """Decode one wire line into a header dict or a WireFrame.

    Raises MalformedRecord for unparseable text and ValidationError for a
    well-formed record that breaks the frame invariants.
    """
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"invalid JSON: {exc.msg}") from None
    if not isinstance(rec, dict):
        raise MalformedRecord("record is not an object")
    kind = rec.get("type", "frame")
    if kind == "header":
        return rec
    if kind != "frame":
        raise MalformedRecord(f"unknown record type {kind!r}")
    try:
        t = int(rec["t"])
    except (KeyError, TypeError, ValueError):
        raise MalformedRecord("frame record needs an integer 't'") from None
    raw = rec.get("persons", [])
    if not isinstance(raw, list):
        raise MalformedRecord("'persons' must be a list")
    if len(raw) > N_PERSONS:
        raise ValidationError("persons", f"{len(raw)} persons exceed the {N_PERSONS} slots")
    persons = tuple(_parse_person(p, s) for s, p in enumerate(raw))
    persons += tuple(PersonState() for _ in range(N_PERSONS - len(persons)))
    frame = WireFrame(t, persons)
    frame.scene().validate(strict_bearing=False)
    return frame


def ingest(line: str) -> WireFrame:
    rec = parse_record(line)
    if not isinstance(rec, WireFrame):
        raise MalformedRecord("expected a frame record")
    return rec


def check_header(rec: dict) -> None:
    if rec.get("schema") != WIRE_SCHEMA or int(rec.get("version", -1)) != WIRE_VERSION:
        raise ValidationError("header", f"unsupported wire schema {rec.get('schema')!r} "
                                        f"version {rec.get('version')!r}")


def frame_record(t: int, frame: SceneFrame) -> str:
    """Wire line for a scene frame (used for replaying rendered scenarios)."""
    persons = []
    for p in frame.persons:
        if not p.present:
            persons.append(None)
        else:
            persons.append({"present": 1, "distance": p.distance, "waving": p.waving,
                            "pointing": p.pointing, "talking": p.talking, "angle": p.angle,
                            "movement": int(p.movement)})
    return json.dumps({"type": "frame", "t": int(t), "persons": persons}, separators=(",", ":"))


def header_record() -> str:
    return json.dumps({"type": "header", "schema": WIRE_SCHEMA, "version": WIRE_VERSION},
                      separators=(",", ":"))


def scenario_to_wire(frames, fps: int = 30) -> list:
    """Header plus one frame line per scene frame, timestamps in integer ms."""
    return [header_record()] + [frame_record(i * 1000 // fps, f) for i, f in enumerate(frames)]


# ----------------------------------------------------------------- state

def resolve_target(label, frame: WireFrame):
    """``label``, or Box when the labelled person is absent from ``frame``."""
    person = label_person(label)
    if person is not None and not frame.persons[person].present:
        log.debug("target %s is absent at t=%d; looking at the box", label.name, frame.t)
        return type(label).BOX
    return label


def label_to_pose(label, frame: WireFrame):
    """(yaw, pitch) in degrees: the target's live bearing, or straight at the box."""
    label = resolve_target(label, frame)
    person = label_person(label)
    if person is None:
        return 0.0, BOX_PITCH
    yaw = float(np.clip(frame.persons[person].angle, -YAW_LIMIT, YAW_LIMIT))
    return yaw, HAND_PITCH if is_hand(label) else 0.0


class ControllerState:
    """Ring buffer, wave edge detectors and greeting cooldown around one model."""

    def __init__(self, model, taxonomy=None, cooldown_ms: int = GREETING_COOLDOWN_MS):
        if taxonomy is not None and Taxonomy.parse(taxonomy) is not model.taxonomy:
            raise ValidationError("taxonomy", f"model is {model.taxonomy.value}, "
                                              f"controller configured for {Taxonomy.parse(taxonomy).value}")
        self.model = model
        self.taxonomy = model.taxonomy
        self.box = index_label(self.taxonomy.size - 1, self.taxonomy)
        self.cooldown_ms = int(cooldown_ms)
        self.buffer = collections.deque(maxlen=WINDOW)
        self.waving = [0] * N_PERSONS
        self.last_greeting = None
        self.fallbacks = 0

    def _greet(self, frame: WireFrame) -> str | None:
        edge = False
        for slot, p in enumerate(frame.persons):
            w = int(p.present and p.waving)
            edge |= w == 1 and self.waving[slot] == 0
            self.waving[slot] = w
        if edge and (self.last_greeting is None or frame.t - self.last_greeting >= self.cooldown_ms):
            self.last_greeting = frame.t
            return GREETING
        return None

    def step(self, frame: WireFrame) -> GazeCommand:
        """Command for ``frame``; predicted from the previous 30 frames once available."""
        features = frame.features()
        say = self._greet(frame)
        if len(self.buffer) < WINDOW:
            cmd = GazeCommand(frame.t, 0.0, 0.0, self.box.name, say, False)
        else:
            probs = self.model.forward(np.stack(self.buffer))[0]
            label = index_label(int(np.argmax(probs)), self.taxonomy)
            target = resolve_target(label, frame)
            self.fallbacks += target is not label
            yaw, pitch = label_to_pose(target, frame)
            cmd = GazeCommand(frame.t, yaw, pitch, target.name, say, True)
        self.buffer.append(features)
        return cmd


# ---------------------------------------------------------------- stream

@dataclass
class SessionStats:
    frames: int = 0
    commands: int = 0
    predicted: int = 0
    neutral: int = 0
    skipped: int = 0
    invalid: int = 0
    dropped: int = 0
    greetings: int = 0
    fallbacks: int = 0
    mean_latency_ms: float = 0.0
    max_latency_ms: float = 0.0
    over_budget: int = 0
    sink_error: str | None = None
    errors: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["errors"] = list(self.errors[:20])
        return d


class DropOldestQueue:
    """Bounded single-consumer queue that discards the oldest item when full."""

    def __init__(self, maxsize: int):
        self.items = collections.deque()
        self.maxsize = maxsize
        self.dropped = 0
        self.closed = False
        self.cond = threading.Condition()

    def put(self, item) -> None:
        with self.cond:
            if len(self.items) >= self.maxsize:
                self.items.popleft()
                self.dropped += 1
            self.items.append(item)
            self.cond.notify()

    def close(self) -> None:
        with self.cond:
            self.closed = True
            self.cond.notify_all()

    def __iter__(self):
        while True:
            with self.cond:
                while not self.items and not self.closed:
                    self.cond.wait()
                if not self.items:
                    return
                item = self.items.popleft()
            yield item


def _threaded(lines, maxsize: int):
    q = DropOldestQueue(maxsize)

    def reader():
        try:
            for line in lines:
                q.put(line)
        finally:
            q.close()

    threading.Thread(target=reader, daemon=True).start()
    return q


def run_stream(source, sink, model, taxonomy=None, cooldown_ms: int = GREETING_COOLDOWN_MS,
               queue_size: int = 0) -> SessionStats:
    """Process wire lines from ``source`` and write one command line per frame to ``sink``.

    ``source`` is any iterable of text lines. With ``queue_size > 0`` a reader
    thread feeds a bounded drop-oldest queue. A failing sink ends the session
    cleanly; the returned stats are complete either way.
    """
    state = ControllerState(model, taxonomy, cooldown_ms)
    stats = SessionStats()
    latencies = []
    lines = _threaded(source, queue_size) if queue_size > 0 else source
    first = True
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        start = time.perf_counter()
        try:
            rec = parse_record(line)
        except MalformedRecord as exc:
            stats.skipped += 1
            stats.errors.append(f"line {lineno}: {exc}")
            log.warning("line %d skipped: %s", lineno, exc)
            continue
        except ValidationError as exc:
            stats.skipped += 1
            stats.invalid += 1
            stats.errors.append(f"line {lineno}: {exc}")
            log.warning("line %d rejected: %s", lineno, exc)
            continue
        if isinstance(rec, dict):
            if not first:
                stats.skipped += 1
                stats.errors.append(f"line {lineno}: header after the first record")
                continue
            check_header(rec)
            first = False
            continue
        first = False
        stats.frames += 1
        cmd = state.step(rec)
        try:
            sink.write(cmd.to_json() + "\n")
        except (OSError, ValueError) as exc:
            stats.sink_error = str(exc)
            log.error("sink failed: %s", exc)
            break
        latencies.append((time.perf_counter() - start) * 1000.0)
        stats.commands += 1
        stats.predicted += cmd.predicted
        stats.neutral += not cmd.predicted
        stats.greetings += cmd.say is not None
    if isinstance(lines, DropOldestQueue):
        stats.dropped = lines.dropped
    stats.fallbacks = state.fallbacks
    if latencies:
        stats.mean_latency_ms = float(np.mean(latencies))
        stats.max_latency_ms = float(np.max(latencies))
        stats.over_budget = int(np.sum(np.asarray(latencies) > FRAME_BUDGET_MS))
    try:
        sink.flush()
    except (OSError, ValueError):
        pass
    return stats


def open_source(spec: str):
    """Line iterator for ``-`` (stdin), a file path, or ``tcp://host:port``.

    The TCP form listens on the address and reads one client connection.
    """
    if spec == "-":
        return sys.stdin
    if spec.startswith("tcp://"):
        host, _, port = spec[len("tcp://"):].rpartition(":")
        server = socket.create_server((host or "127.0.0.1", int(port)))
        conn, _ = server.accept()
        server.close()
        return conn.makefile("r", encoding="utf-8", newline="\n")
    return open(spec, encoding="utf-8")
