"""Scripted social scenes, screen AOIs and a synthetic attention oracle.

The oracle stands in for human participants: it turns a rendered scene into a
per-frame gaze target (a Fine13 label plus a screen point).
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core import (
    FAR_DISTANCE, FPS, HOME_ANGLES, N_PERSONS, NEAR_DISTANCE, SCREEN_H, SCREEN_W,
    Fine13, Movement, PersonState, SceneFrame, ValidationError, encode_frames,
)

N_AOI = 13
SEGMENT_SECONDS = 5.0
TRANSITION_SECONDS = 1.0
CANONICAL_SEGMENTS = 24

# pinhole projection and AOI geometry (pixels)
FOCAL_PX = 460.0
HORIZON_Y = 540.0
BODY_HEIGHT_PX_M = 900.0  # body rectangle height times distance
BODY_ASPECT = 0.4
HAND_FRAC = 0.2
RIGHT_HAND_OFFSET = (-0.45, -0.15)  # (x in body widths, y in body heights)
LEFT_HAND_OFFSET = (0.45, -0.25)
BOX_RECT = (840.0, 720.0, 1080.0, 880.0)
OFF_SCREEN_POINT = (960.0, 30.0)  # where a participant looks when not at any AOI
WALK_OFF_ANGLE = 90.0


@dataclass(frozen=True)
class Segment:
    """Target state of the four person slots for one scripted segment.

    ``entering`` slots walk in from the side during the first transition
    window; ``leaving`` slots walk out during the last one and are absent in
    the next segment.
    """

    persons: tuple
    entering: frozenset = frozenset()
    leaving: frozenset = frozenset()


@dataclass(frozen=True)
class ScenarioScript:
    segments: tuple
    fps: int = FPS
    segment_duration: float = SEGMENT_SECONDS
    transition_duration: float = TRANSITION_SECONDS
    stimulus: str = "animation"

    @property
    def frames_per_segment(self) -> int:
        return int(round(self.segment_duration * self.fps))

    @property
    def transition_frames(self) -> int:
        return int(round(self.transition_duration * self.fps))

    @property
    def n_frames(self) -> int:
        return self.frames_per_segment * len(self.segments)


@dataclass
class Rendering:
    frames: list
    features: np.ndarray  # (n, 28)
    aoi: np.ndarray  # (n, 13, 4) as x0, y0, x1, y1; NaN rows are absent


@dataclass(frozen=True)
class OraclePolicy:
    mode: str = "deterministic"
    talking: float = 3.0
    waving: float = 2.0
    pointing: float = 1.5
    entering: float = 1.0
    proximity: float = 1.0
    box: float = 0.3
    fixation_mean: float = 25.0  # frames
    fixation_shape: float = 2.0
    seed: int = 0

    def validate(self) -> None:
        if self.mode not in ("deterministic", "stochastic"):
            raise ValidationError("mode", f"unknown oracle mode {self.mode!r}")
        for name in ("talking", "waving", "pointing", "entering", "proximity", "box"):
            if getattr(self, name) < 0:
                raise ValidationError(name, "salience weights must be >= 0")
        if self.fixation_mean < 1 or self.fixation_shape <= 0:
            raise ValidationError("fixation_mean", "fixation durations need mean >= 1 frame and shape > 0")


COHORT_POLICIES = {
    # fixation means in frames, loosely matching the reported mean label frames
    "child": OraclePolicy(mode="stochastic", fixation_mean=26.0),
    "adult": OraclePolicy(mode="stochastic", fixation_mean=45.0),
}


def cohort_policy(cohort: str, seed: int) -> OraclePolicy:
    try:
        return replace(COHORT_POLICIES[cohort.lower()], seed=seed)
    except KeyError:
        raise ValidationError("cohort", f"unknown cohort {cohort!r}") from None


@dataclass
class OracleGaze:
    labels: np.ndarray  # Fine13 codes, -1 = no target
    points: np.ndarray  # (n, 2), NaN where no target


# ----------------------------------------------------------------- scripts

def _person(present, distance="near", talking=0, waving=0, pointing=0):
    if not present:
        return PersonState()
    return {"present": 1, "distance": distance, "talking": talking,
            "waving": waving, "pointing": pointing}


def _canonical_schedule(stimulus: str) -> list:
    """Representative 24-segment schedule for one stimulus.

    Each entry lists the four slots as (present, near/far, talking, waving,
    pointing). Segment 7 (35-40 s) of the animation has P1 near and idle, P3
    near, waving and pointing, P2 and P4 absent; segment 19 (95-100 s) of the
    live-action clip has P1 and P3 near and idle, P2 far talking, waving and
    pointing, P4 far pointing.
    """
    N, F = "near", "far"
    _ = (0,)
    animation = [
        [(1, N, 0, 0, 0), _, _, (1, N, 0, 0, 0)],
        [(1, N, 1, 0, 0), _, _, (1, N, 0, 0, 0)],
        [(1, N, 0, 0, 0), (1, F, 0, 0, 0), _, (1, N, 1, 0, 0)],
        [(1, N, 0, 0, 0), (1, F, 0, 1, 0), _, (1, N, 0, 0, 0)],
        [(1, F, 0, 0, 0), (1, F, 1, 0, 0), (1, N, 0, 0, 0), (1, N, 0, 0, 0)],
        [(1, F, 0, 0, 1), (1, F, 0, 0, 0), (1, N, 1, 0, 0), (1, N, 0, 0, 0)],
        [(1, N, 0, 0, 0), (1, F, 0, 0, 0), (1, N, 0, 0, 0), _],
        [(1, N, 0, 0, 0), _, (1, N, 0, 1, 1), _],
        [(1, N, 0, 0, 0), _, (1, N, 1, 0, 0), _],
        [(1, N, 0, 0, 0), (1, N, 0, 0, 0), (1, F, 0, 0, 0), _],
        [(1, N, 1, 0, 0), (1, N, 0, 0, 1), (1, F, 0, 0, 0), (1, F, 0, 0, 0)],
        [(1, N, 0, 0, 0), (1, N, 1, 0, 0), (1, F, 0, 1, 0), (1, F, 0, 0, 0)],
        [_, (1, N, 0, 0, 0), (1, F, 0, 0, 0), (1, F, 1, 0, 0)],
        [_, (1, N, 0, 1, 0), (1, F, 0, 0, 0), (1, F, 0, 0, 0)],
        [(1, F, 0, 0, 0), (1, N, 0, 0, 0), _, (1, F, 0, 0, 1)],
        [(1, F, 1, 0, 0), (1, N, 0, 0, 0), _, (1, N, 0, 0, 0)],
        [(1, F, 0, 0, 0), (1, N, 1, 1, 0), (1, N, 0, 0, 0), (1, N, 0, 0, 0)],
        [(1, F, 0, 1, 0), (1, F, 0, 0, 0), (1, N, 0, 0, 1), (1, N, 1, 0, 0)],
        [(1, N, 0, 0, 0), (1, F, 0, 0, 0), (1, N, 0, 0, 0), _],
        [(1, N, 0, 0, 0), _, (1, N, 1, 0, 0), _],
        [(1, N, 0, 0, 1), _, (1, F, 0, 0, 0), (1, N, 0, 0, 0)],
        [(1, N, 0, 0, 0), (1, N, 0, 0, 0), (1, F, 0, 1, 0), (1, N, 0, 0, 0)],
        [(1, N, 0, 0, 0), (1, N, 1, 0, 0), (1, F, 0, 0, 0), (1, N, 0, 0, 0)],
        [(1, N, 0, 0, 0), (1, N, 0, 0, 0), (1, F, 0, 0, 0), (1, N, 0, 1, 0)],
    ]
    live_action = [
        [(1, N, 0, 0, 0), (1, F, 0, 0, 0), _, _],
        [(1, N, 1, 0, 0), (1, F, 0, 0, 0), _, _],
        [(1, N, 0, 0, 0), (1, F, 0, 0, 1), (1, N, 0, 0, 0), _],
        [(1, N, 0, 0, 0), (1, F, 1, 0, 0), (1, N, 0, 0, 0), _],
        [(1, N, 0, 0, 0), (1, F, 0, 0, 0), (1, N, 0, 1, 0), (1, F, 0, 0, 0)],
        [(1, F, 0, 0, 0), (1, F, 0, 0, 0), (1, N, 0, 0, 0), (1, F, 1, 0, 0)],
        [(1, F, 0, 0, 0), _, (1, N, 1, 0, 0), (1, F, 0, 0, 0)],
        [(1, F, 0, 1, 0), _, (1, N, 0, 0, 0), (1, F, 0, 0, 0)],
        [(1, F, 0, 0, 0), (1, N, 0, 0, 0), (1, N, 0, 0, 0), _],
        [(1, F, 0, 0, 0), (1, N, 1, 0, 1), (1, N, 0, 0, 0), _],
        [_, (1, N, 0, 0, 0), (1, N, 0, 0, 0), (1, N, 0, 0, 0)],
        [_, (1, N, 0, 1, 0), (1, F, 1, 0, 0), (1, N, 0, 0, 0)],
        [(1, N, 0, 0, 0), (1, N, 0, 0, 0), (1, F, 0, 0, 0), (1, N, 0, 0, 1)],
        [(1, N, 1, 0, 0), (1, N, 0, 0, 0), (1, F, 0, 0, 0), (1, N, 0, 0, 0)],
        [(1, N, 0, 0, 0), (1, F, 0, 0, 0), _, (1, N, 1, 1, 0)],
        [(1, N, 0, 0, 0), (1, F, 0, 0, 0), _, (1, N, 0, 0, 0)],
        [(1, N, 0, 0, 0), (1, F, 0, 1, 0), (1, N, 0, 0, 0), (1, F, 0, 0, 0)],
        [(1, N, 0, 0, 0), (1, F, 0, 0, 0), (1, N, 1, 0, 0), (1, F, 0, 0, 0)],
        [(1, N, 0, 0, 0), (1, F, 0, 0, 0), (1, N, 0, 0, 0), (1, F, 0, 0, 0)],
        [(1, N, 0, 0, 0), (1, F, 1, 1, 1), (1, N, 0, 0, 0), (1, F, 0, 0, 1)],
        [(1, N, 0, 0, 0), (1, F, 0, 0, 0), (1, N, 0, 0, 0), _],
        [(1, F, 0, 0, 0), (1, F, 1, 0, 0), (1, N, 0, 0, 0), _],
        [(1, F, 0, 0, 0), (1, F, 0, 0, 0), (1, N, 0, 0, 1), (1, N, 0, 0, 0)],
        [(1, F, 0, 0, 0), (1, F, 0, 0, 0), (1, N, 0, 0, 0), (1, N, 1, 0, 0)],
    ]
    table = {"animation": animation, "live_action": live_action}
    if stimulus not in table:
        raise ValidationError("canonical", f"unknown canonical stimulus {stimulus!r}")
    return [{"persons": [_person(*slot) for slot in seg]} for seg in table[stimulus]]


def _resolve_distance(value, where: str) -> float:
    if value == "near":
        return NEAR_DISTANCE
    if value == "far":
        return FAR_DISTANCE
    try:
        d = float(value)
    except (TypeError, ValueError):
        raise ValidationError(where, f"distance must be 'near', 'far' or metres, got {value!r}") from None
    if not 0.5 <= d <= 10.0:
        raise ValidationError(where, "distance must lie in [0.5, 10] m")
    return d


def _parse_segment(raw, k: int) -> tuple:
    where = f"segments[{k}]"
    entries = raw.get("persons", []) if isinstance(raw, dict) else raw
    if len(entries) > N_PERSONS:
        raise ValidationError(f"{where}.persons", f"at most {N_PERSONS} persons per segment, got {len(entries)}")
    slots = [PersonState()] * N_PERSONS
    taken = set()
    for pos, entry in enumerate(entries):
        if isinstance(entry, PersonState):
            entry = {"present": entry.present, "distance": entry.distance, "talking": entry.talking,
                     "waving": entry.waving, "pointing": entry.pointing}
        if entry is None or not entry or not entry.get("present", 1):
            if entry and "angle" in entry:
                slot = _slot_for_angle(entry["angle"], f"{where}.persons[{pos}].angle")
                taken.add(slot)
            continue
        slot = pos
        if "angle" in entry:
            slot = _slot_for_angle(entry["angle"], f"{where}.persons[{pos}].angle")
        if slot in taken:
            raise ValidationError(f"{where}.persons[{pos}]", f"slot {slot + 1} assigned twice")
        taken.add(slot)
        flags = {}
        for name in ("talking", "waving", "pointing"):
            v = int(entry.get(name, 0))
            if v not in (0, 1):
                raise ValidationError(f"{where}.persons[{pos}].{name}", "flag must be 0 or 1")
            flags[name] = v
        slots[slot] = PersonState(
            present=1,
            distance=_resolve_distance(entry.get("distance", "near"), f"{where}.persons[{pos}].distance"),
            angle=HOME_ANGLES[slot],
            **flags,
        )
    return tuple(slots)


def _slot_for_angle(angle, where: str) -> int:
    try:
        return HOME_ANGLES.index(float(angle))
    except ValueError:
        raise ValidationError(where, f"angle {angle} is not one of the home bearings {HOME_ANGLES}") from None


def _random_segments(spec: dict, rng: np.random.Generator) -> list:
    n = int(spec.get("n_segments", CANONICAL_SEGMENTS))
    p_present = float(spec.get("p_present", 0.7))
    p_near = float(spec.get("p_near", 0.5))
    p_flags = {name: float(spec.get(f"p_{name}", d))
               for name, d in (("talking", 0.3), ("waving", 0.25), ("pointing", 0.25))}
    segments = []
    for _ in range(n):
        persons = []
        for slot in range(N_PERSONS):
            if rng.random() >= p_present:
                persons.append(None)
                continue
            entry = {"present": 1, "distance": "near" if rng.random() < p_near else "far"}
            for name, p in p_flags.items():
                entry[name] = int(rng.random() < p)
            persons.append(entry)
        segments.append({"persons": persons})
    return segments


def _derive_choreography(persons_per_segment: list) -> list:
    segments = []
    n = len(persons_per_segment)
    for k, persons in enumerate(persons_per_segment):
        entering = {p for p in range(N_PERSONS)
                    if persons[p].present and k > 0 and not persons_per_segment[k - 1][p].present}
        leaving = {p for p in range(N_PERSONS)
                   if persons[p].present and k + 1 < n and not persons_per_segment[k + 1][p].present}
        segments.append(Segment(persons, frozenset(entering), frozenset(leaving)))
    return segments


def build_script(config: dict | None = None, seed: int = 0) -> ScenarioScript:
    """Build a scenario script from a config mapping.

    Recognised keys: ``canonical`` ("animation" or "live_action"),
    ``segments`` (explicit list), ``random`` (generation parameters),
    ``fps``, ``segment_seconds``, ``transition_seconds``, ``stimulus``.
    With no config the canonical animation script is returned.
    """
    config = dict(config or {"canonical": "animation"})
    fps = int(config.get("fps", FPS))
    seg_s = float(config.get("segment_seconds", SEGMENT_SECONDS))
    trans_s = float(config.get("transition_seconds", TRANSITION_SECONDS))
    stimulus = config.get("stimulus")
    if "segments" in config:
        raw_segments = config["segments"]
    elif "random" in config:
        raw_segments = _random_segments(config["random"] or {}, np.random.default_rng(seed))
    else:
        stimulus = stimulus or config.get("canonical", "animation")
        raw_segments = _canonical_schedule(config.get("canonical", "animation"))
    if not raw_segments:
        raise ValidationError("segments", "a script needs at least one segment")
    persons = [_parse_segment(raw, k) for k, raw in enumerate(raw_segments)]
    script = ScenarioScript(tuple(_derive_choreography(persons)), fps=fps, segment_duration=seg_s,
                            transition_duration=trans_s, stimulus=stimulus or "animation")
    if script.transition_frames < 2:
        raise ValidationError("transition_seconds", "transition must span at least 2 frames")
    if script.frames_per_segment < 2 * script.transition_frames:
        raise ValidationError("segment_seconds", "segments must fit an entry and an exit transition")
    return script


def script_to_config(script: ScenarioScript) -> dict:
    """Explicit config that rebuilds ``script`` exactly."""
    segments = []
    for seg in script.segments:
        persons = []
        for p in seg.persons:
            if not p.present:
                persons.append(None)
            else:
                persons.append({"present": 1, "distance": p.distance, "talking": p.talking,
                                "waving": p.waving, "pointing": p.pointing})
        segments.append({"persons": persons})
    return {"fps": script.fps, "segment_seconds": script.segment_duration,
            "transition_seconds": script.transition_duration, "stimulus": script.stimulus,
            "segments": segments}


# --------------------------------------------------------------- rendering

def _lerp(a: float, b: float, u: float) -> float:
    return a + (b - a) * u


def _side(slot: int) -> float:
    return math.copysign(WALK_OFF_ANGLE, HOME_ANGLES[slot])


def render_frames(script: ScenarioScript) -> Rendering:
    F = script.frames_per_segment
    T = script.transition_frames
    frames = []
    for k, seg in enumerate(script.segments):
        prev = script.segments[k - 1] if k > 0 else None
        for u in range(F):
            persons = []
            for slot, target in enumerate(seg.persons):
                if not target.present:
                    persons.append(PersonState())
                    continue
                home = HOME_ANGLES[slot]
                distance = target.distance
                if prev is not None and prev.persons[slot].present and u < T:
                    distance = _lerp(prev.persons[slot].distance, target.distance, u / (T - 1))
                angle, movement = home, Movement.STANDING
                if slot in seg.entering and u < T:
                    angle, movement = _lerp(_side(slot), home, u / (T - 1)), Movement.ENTERING
                elif slot in seg.leaving and u >= F - T:
                    angle, movement = _lerp(home, _side(slot), (u - (F - T)) / (T - 1)), Movement.LEAVING
                persons.append(replace(target, distance=distance, angle=angle, movement=movement))
            frames.append(SceneFrame(k * F + u, tuple(persons)))
    features = encode_frames(frames)
    aoi = np.stack([aoi_for_frame(f) for f in frames]) if frames else np.zeros((0, N_AOI, 4))
    return Rendering(frames, features, aoi)


def _clip_rect(x0, y0, x1, y1):
    x0, x1 = max(x0, 0.0), min(x1, float(SCREEN_W))
    y0, y1 = max(y0, 0.0), min(y1, float(SCREEN_H))
    if x1 <= x0 or y1 <= y0:
        return None
    return (x0, y0, x1, y1)


def aoi_for_frame(frame: SceneFrame) -> np.ndarray:
    """Screen rectangles for the 13 Fine13 targets; NaN rows are absent."""
    out = np.full((N_AOI, 4), np.nan)
    for slot, p in enumerate(frame.persons):
        if not p.present or abs(p.angle) >= 89.0:
            continue
        cx = SCREEN_W / 2 + FOCAL_PX * math.tan(math.radians(p.angle))
        h = BODY_HEIGHT_PX_M / p.distance
        w = BODY_ASPECT * h
        s = HAND_FRAC * h
        rects = {
            slot: (cx - w / 2, HORIZON_Y - h / 2, cx + w / 2, HORIZON_Y + h / 2),
            4 + slot: _square(cx + RIGHT_HAND_OFFSET[0] * w, HORIZON_Y + RIGHT_HAND_OFFSET[1] * h, s),
            8 + slot: _square(cx + LEFT_HAND_OFFSET[0] * w, HORIZON_Y + LEFT_HAND_OFFSET[1] * h, s),
        }
        for idx, rect in rects.items():
            clipped = _clip_rect(*rect)
            if clipped is not None:
                out[idx] = clipped
    out[Fine13.BOX] = BOX_RECT
    return out


def _square(cx, cy, s):
    return (cx - s / 2, cy - s / 2, cx + s / 2, cy + s / 2)


# ------------------------------------------------------------------ oracle

def salience(frame: SceneFrame, policy: OraclePolicy) -> np.ndarray:
    """Per-target salience over the 13 Fine13 labels (before AOI masking)."""
    s = np.zeros(N_AOI)
    for slot, p in enumerate(frame.persons):
        if not p.present:
            continue
        s[slot] = (policy.talking * p.talking
                   + policy.entering * (p.movement == Movement.ENTERING)
                   + policy.proximity / p.distance)
        s[4 + slot] = policy.pointing * p.pointing
        s[8 + slot] = policy.waving * p.waving
    s[Fine13.BOX] = policy.box
    return s


# person-major candidate order: P1 body, P1 right, P1 left, P2 body, ..., box
TIE_ORDER = np.array([i for p in range(N_PERSONS) for i in (p, 4 + p, 8 + p)] + [int(Fine13.BOX)])


def oracle_gaze(rendering: Rendering, policy: OraclePolicy) -> OracleGaze:
    if not rendering.frames:
        raise ValidationError("frames", "oracle needs at least one frame")
    policy.validate()
    rng = np.random.default_rng(policy.seed)
    n = len(rendering.frames)
    labels = np.full(n, -1, dtype=np.int64)
    points = np.full((n, 2), np.nan)
    current, remaining = -1, 0
    for i, frame in enumerate(rendering.frames):
        s = salience(frame, policy)
        available = ~np.isnan(rendering.aoi[i, :, 0]) & (s > 0)
        if not available.any():
            current, remaining = -1, 0
            continue
        if policy.mode == "deterministic":
            ordered = np.where(available[TIE_ORDER], s[TIE_ORDER], -np.inf)
            target = int(TIE_ORDER[int(np.argmax(ordered))])
        else:
            if remaining <= 0 or current < 0 or not available[current]:
                weights = np.where(available, s, 0.0)
                current = int(rng.choice(N_AOI, p=weights / weights.sum()))
                remaining = _fixation_frames(rng, policy)
            target = current
            remaining -= 1
        x0, y0, x1, y1 = rendering.aoi[i, target]
        labels[i] = target
        points[i] = ((x0 + x1) / 2, (y0 + y1) / 2)
    return OracleGaze(labels, points)


def _fixation_frames(rng: np.random.Generator, policy: OraclePolicy) -> int:
    scale = policy.fixation_mean / policy.fixation_shape
    return max(1, int(round(rng.gamma(policy.fixation_shape, scale))))


# ---------------------------------------------------------- raw gaze samples

FRAME_SAMPLE_SPANS = ((0, 33), (33, 66), (66, 100))


def synthesize_samples(gaze: OracleGaze, seed: int = 0, blink_rate: float = 0.0,
                       jitter_px: float = 0.0):
    """Expand 30 fps oracle points into a 1000 Hz sample stream.

    Every 3 frames map to 100 samples (33/33/34). No-target frames look at a
    fixed off-AOI point. ``blink_rate`` is the per-frame probability that a
    blink (100-250 ms of missing samples) starts. Returns ``(t_ms, x, y)``
    with NaN marking missing samples.
    """
    rng = np.random.default_rng(seed)
    n = len(gaze.labels)
    n_blocks = -(-n // 3)
    x = np.empty(n_blocks * 100)
    y = np.empty(n_blocks * 100)
    for f in range(n_blocks * 3):
        lo, hi = FRAME_SAMPLE_SPANS[f % 3]
        sl = slice((f // 3) * 100 + lo, (f // 3) * 100 + hi)
        if f < n and gaze.labels[f] >= 0:
            px, py = gaze.points[f]
        else:
            px, py = OFF_SCREEN_POINT
        x[sl], y[sl] = px, py
    if jitter_px > 0:
        x += rng.normal(0.0, jitter_px, x.size)
        y += rng.normal(0.0, jitter_px, y.size)
    if blink_rate > 0:
        for f in np.flatnonzero(rng.random(n) < blink_rate):
            start = (f // 3) * 100 + FRAME_SAMPLE_SPANS[f % 3][0]
            length = int(rng.integers(100, 251))
            x[start:start + length] = np.nan
            y[start:start + length] = np.nan
    t = np.arange(x.size, dtype=np.int64)
    return t, x, y


# ------------------------------------------------------------------- files

def write_aoi_file(path, aoi: np.ndarray) -> None:
    """AOI sidecar: JSON header line, then frame_index,label,x0,y0,x1,y1 rows."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# " + json.dumps({"format": "gazekit-aoi", "version": 1, "n_frames": int(len(aoi)),
                                    "screen": [SCREEN_W, SCREEN_H]}, sort_keys=True) + "\n")
        fh.write("frame_index,label,x0,y0,x1,y1\n")
        for i, rects in enumerate(aoi):
            for idx in range(N_AOI):
                if not np.isnan(rects[idx, 0]):
                    fh.write(f"{i},{Fine13(idx).name}," + ",".join(repr(float(v)) for v in rects[idx]) + "\n")


def read_aoi_file(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline()[2:])
        if header.get("format") != "gazekit-aoi":
            raise ValidationError("header", f"{path} is not an AOI file")
        fh.readline()
        aoi = np.full((int(header["n_frames"]), N_AOI, 4), np.nan)
        for row in csv.reader(fh):
            if row:
                aoi[int(row[0]), Fine13[row[1]]] = [float(v) for v in row[2:6]]
    return aoi


def write_label_file(path, gaze: OracleGaze) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("frame_index,label,x,y\n")
        for i, (code, (x, y)) in enumerate(zip(gaze.labels, gaze.points)):
            if code < 0:
                fh.write(f"{i},NONE,,\n")
            else:
                fh.write(f"{i},{Fine13(int(code)).name},{float(x)!r},{float(y)!r}\n")


def read_label_file(path) -> OracleGaze:
    labels, points = [], []
    with open(path, encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if row["label"] == "NONE":
                labels.append(-1)
                points.append((np.nan, np.nan))
            else:
                labels.append(int(Fine13[row["label"]]))
                points.append((float(row["x"]), float(row["y"])))
    return OracleGaze(np.array(labels, dtype=np.int64), np.array(points).reshape(-1, 2))


def write_samples_file(path, t, x, y) -> None:
    """Raw sample CSV (t_ms, x, y) with empty cells for missing data."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t_ms,x,y\n")
        for ti, xi, yi in zip(t, x, y):
            xs = "" if np.isnan(xi) else repr(float(xi))
            ys = "" if np.isnan(yi) else repr(float(yi))
            fh.write(f"{int(ti)},{xs},{ys}\n")


@dataclass
class Recording:
    """One synthetic participant watching one scenario."""

    participant: str
    cohort: str
    stimulus: str
    rendering: Rendering
    gaze: OracleGaze
    extra: dict = field(default_factory=dict)
