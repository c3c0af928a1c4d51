"""Domain types, label taxonomies and the 28-value per-frame feature encoding."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

N_PERSONS = 4
N_ATTRS = 7
N_FEATURES = N_PERSONS * N_ATTRS
WINDOW = 30
FPS = 30
SCREEN_W, SCREEN_H = 1920, 1080

HOME_ANGLES = (-60.0, -30.0, 30.0, 60.0)
BOX_ANGLE = 0.0

# feature normalisation constants
DISTANCE_SCALE = 5.0
ANGLE_SCALE = 60.0
MOVEMENT_SCALE = 2.0

NEAR_DISTANCE = 1.5
FAR_DISTANCE = 3.0

ATTRIBUTES = ("present", "distance", "waving", "pointing", "talking", "angle", "movement")
FEATURE_FORMAT = "gazekit-features"
FEATURE_FORMAT_VERSION = 1


class ValidationError(ValueError):
    """Raised when a value violates a domain invariant.

    ``field`` names the offending attribute, e.g. ``persons[2].waving``.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class Movement(enum.IntEnum):
    STANDING = 0
    ENTERING = 1
    LEAVING = 2


class Taxonomy(enum.Enum):
    COARSE5 = "coarse5"
    FINE13 = "fine13"

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def labels(self):
        return Coarse5 if self is Taxonomy.COARSE5 else Fine13

    @classmethod
    def parse(cls, value) -> "Taxonomy":
        if isinstance(value, Taxonomy):
            return value
        text = str(value).strip().lower()
        aliases = {"coarse5": cls.COARSE5, "5": cls.COARSE5, "coarse": cls.COARSE5,
                   "fine13": cls.FINE13, "13": cls.FINE13, "fine": cls.FINE13}
        try:
            return aliases[text]
        except KeyError:
            raise ValidationError("taxonomy", f"unknown taxonomy {value!r}") from None


class Coarse5(enum.IntEnum):
    P1 = 0
    P2 = 1
    P3 = 2
    P4 = 3
    BOX = 4


class Fine13(enum.IntEnum):
    P1_BODY = 0
    P2_BODY = 1
    P3_BODY = 2
    P4_BODY = 3
    P1_RIGHT_HAND = 4
    P2_RIGHT_HAND = 5
    P3_RIGHT_HAND = 6
    P4_RIGHT_HAND = 7
    P1_LEFT_HAND = 8
    P2_LEFT_HAND = 9
    P3_LEFT_HAND = 10
    P4_LEFT_HAND = 11
    BOX = 12


def taxonomy_of(label) -> Taxonomy:
    if isinstance(label, Coarse5):
        return Taxonomy.COARSE5
    if isinstance(label, Fine13):
        return Taxonomy.FINE13
    raise TypeError(f"not a label: {label!r}")


def label_index(label) -> int:
    taxonomy_of(label)
    return int(label)


def index_label(i: int, taxonomy) -> Coarse5 | Fine13:
    taxonomy = Taxonomy.parse(taxonomy)
    if not 0 <= int(i) < taxonomy.size:
        raise ValidationError("label", f"index {i} outside 0..{taxonomy.size - 1} for {taxonomy.value}")
    return taxonomy.labels(int(i))


def parse_label(name: str, taxonomy) -> Coarse5 | Fine13:
    taxonomy = Taxonomy.parse(taxonomy)
    try:
        return taxonomy.labels[name.strip().upper()]
    except KeyError:
        raise ValidationError("label", f"unknown {taxonomy.value} label {name!r}") from None


def label_person(label) -> int | None:
    """0-based person slot a label refers to, or None for the box."""
    if label == label.__class__.BOX:
        return None
    return int(label) % N_PERSONS


def is_hand(label) -> bool:
    return isinstance(label, Fine13) and 4 <= int(label) < 12


def collapse(label) -> Coarse5:
    """Map a Fine13 label (hands included) onto its Coarse5 person or box."""
    if isinstance(label, Coarse5):
        return label
    if label is Fine13.BOX:
        return Coarse5.BOX
    return Coarse5(int(label) % N_PERSONS)


def collapse_indices(fine_codes) -> np.ndarray:
    """Vectorised ``collapse`` for integer codes; negative codes pass through."""
    codes = np.asarray(fine_codes, dtype=np.int64)
    out = np.where(codes == Fine13.BOX, Coarse5.BOX, codes % N_PERSONS)
    return np.where(codes < 0, codes, out)


@dataclass(frozen=True)
class PersonState:
    present: int = 0
    distance: float = 0.0
    waving: int = 0
    pointing: int = 0
    talking: int = 0
    angle: float = 0.0
    movement: Movement = Movement.STANDING

    @classmethod
    def absent(cls) -> "PersonState":
        return cls()

    def validate(self, slot: int, strict_bearing: bool = True) -> None:
        prefix = f"persons[{slot}]"
        for name in ("present", "waving", "pointing", "talking"):
            if getattr(self, name) not in (0, 1):
                raise ValidationError(f"{prefix}.{name}", "flag must be 0 or 1")
        if int(self.movement) not in (0, 1, 2):
            raise ValidationError(f"{prefix}.movement", "must be 0, 1 or 2")
        if not np.isfinite(self.distance) or self.distance < 0:
            raise ValidationError(f"{prefix}.distance", "must be a finite value >= 0")
        if not np.isfinite(self.angle) or not -90.0 <= self.angle <= 90.0:
            raise ValidationError(f"{prefix}.angle", "must lie in [-90, 90]")
        if not self.present:
            for name in ("waving", "pointing", "talking"):
                if getattr(self, name):
                    raise ValidationError(f"{prefix}.{name}", "set on an absent person")
            if self.movement != Movement.STANDING:
                raise ValidationError(f"{prefix}.movement", "absent person must be standing")
            return
        if self.distance <= 0:
            raise ValidationError(f"{prefix}.distance", "present person needs distance > 0")
        if strict_bearing and self.movement == Movement.STANDING and self.angle not in HOME_ANGLES:
            raise ValidationError(f"{prefix}.angle", f"standing person must be at one of {HOME_ANGLES}")


@dataclass(frozen=True)
class SceneFrame:
    frame_index: int
    persons: tuple = field(default_factory=lambda: tuple(PersonState() for _ in range(N_PERSONS)))
    box_angle: float = BOX_ANGLE

    def validate(self, strict_bearing: bool = True) -> None:
        if self.frame_index < 0:
            raise ValidationError("frame_index", "must be >= 0")
        if len(self.persons) != N_PERSONS:
            raise ValidationError("persons", f"expected exactly {N_PERSONS} person slots, got {len(self.persons)}")
        if self.box_angle != BOX_ANGLE:
            raise ValidationError("box_angle", "box is fixed at 0 degrees")
        for slot, person in enumerate(self.persons):
            if not isinstance(person, PersonState):
                raise ValidationError(f"persons[{slot}]", "not a PersonState")
            person.validate(slot, strict_bearing=strict_bearing)


def encode_person(person: PersonState) -> list:
    if not person.present:
        return [0.0] * N_ATTRS
    return [
        1.0,
        min(person.distance / DISTANCE_SCALE, 1.0),
        float(person.waving),
        float(person.pointing),
        float(person.talking),
        # walkers beyond the outer bearings saturate
        float(np.clip(person.angle / ANGLE_SCALE, -1.0, 1.0)),
        int(person.movement) / MOVEMENT_SCALE,
    ]


def encode_frame(frame: SceneFrame, strict_bearing: bool = True) -> np.ndarray:
    """Encode a frame as 28 values: person rows 1..4, each in ATTRIBUTES order."""
    frame.validate(strict_bearing=strict_bearing)
    out = np.empty(N_FEATURES)
    for slot, person in enumerate(frame.persons):
        out[slot * N_ATTRS:(slot + 1) * N_ATTRS] = encode_person(person)
    return out


def encode_frames(frames, strict_bearing: bool = True) -> np.ndarray:
    if not frames:
        return np.zeros((0, N_FEATURES))
    return np.stack([encode_frame(f, strict_bearing) for f in frames])


def decode_features(values, frame_index: int = 0) -> SceneFrame:
    """Inverse of ``encode_frame`` up to the normalisation constants."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (N_FEATURES,):
        raise ValidationError("values", f"expected {N_FEATURES} values, got shape {values.shape}")
    persons = []
    for row in values.reshape(N_PERSONS, N_ATTRS):
        if row[0] < 0.5:
            persons.append(PersonState())
            continue
        persons.append(PersonState(
            present=1,
            distance=float(row[1] * DISTANCE_SCALE),
            waving=int(round(row[2])),
            pointing=int(round(row[3])),
            talking=int(round(row[4])),
            angle=float(row[5] * ANGLE_SCALE),
            movement=Movement(int(round(row[6] * MOVEMENT_SCALE))),
        ))
    return SceneFrame(frame_index, tuple(persons))


def feature_columns() -> list:
    return [f"p{p + 1}_{attr}" for p in range(N_PERSONS) for attr in ATTRIBUTES]


def normalization_constants() -> dict:
    return {"distance_scale": DISTANCE_SCALE, "angle_scale": ANGLE_SCALE,
            "movement_scale": MOVEMENT_SCALE}


def write_feature_file(path, features, taxonomy=None, extra: dict | None = None) -> None:
    """Write per-frame feature vectors.

    Layout: one ``#``-prefixed JSON header line (format, version, taxonomy,
    normalisation constants), one CSV column header, then one row per frame
    (``frame_index`` followed by the 28 values, full float precision).
    """
    features = np.asarray(features, dtype=np.float64).reshape(-1, N_FEATURES)
    header = {"format": FEATURE_FORMAT, "version": FEATURE_FORMAT_VERSION,
              "taxonomy": Taxonomy.parse(taxonomy).value if taxonomy is not None else None,
              **normalization_constants()}
    if extra:
        header.update(extra)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        fh.write(",".join(["frame_index"] + feature_columns()) + "\n")
        for i, row in enumerate(features):
            fh.write(str(i) + "," + ",".join(repr(float(v)) for v in row) + "\n")


def read_feature_file(path):
    """Return ``(features, header)``; rejects unknown formats and versions."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValidationError("header", f"{path} lacks a feature-file header")
        header = json.loads(first[2:])
        if header.get("format") != FEATURE_FORMAT or header.get("version") != FEATURE_FORMAT_VERSION:
            raise ValidationError("header", f"unsupported feature file {header.get('format')} v{header.get('version')}")
        columns = fh.readline().strip().split(",")
        if columns[1:] != feature_columns():
            raise ValidationError("columns", "feature columns do not match the 4x7 layout")
        rows = [line.split(",") for line in fh if line.strip()]
    if not rows:
        return np.zeros((0, N_FEATURES)), header
    data = np.array([[float(v) for v in r[1:]] for r in rows])
    return data, header
