"""Eye-tracker samples to labelled 30 fps frames and windowed datasets."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import (
    N_FEATURES, SCREEN_H, SCREEN_W, WINDOW, Taxonomy, ValidationError, collapse_indices,
    index_label,
)

NO_LABEL = -1
COHORTS = ("child", "adult")
STIMULI = ("animation", "live_action")


@dataclass
class GazeFrames:
    x: np.ndarray
    y: np.ndarray
    valid: np.ndarray  # bool

    def __len__(self):
        return len(self.x)


def sample_validity(x, y) -> np.ndarray:
    """True where a sample is present and inside [0, 1920) x [0, 1080)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        return np.isfinite(x) & np.isfinite(y) & (x >= 0) & (x < SCREEN_W) & (y >= 0) & (y < SCREEN_H)


def resample(x, y, valid=None) -> GazeFrames:
    """Average each 100-sample block into three frames of 33, 33 and 34 samples.

    A frame is invalid when any of its samples is missing or off-screen; the
    tail beyond the last whole block is dropped.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if valid is None:
        valid = sample_validity(x, y)
    fx, fy, fv = kernels.resample_means(x, y, np.asarray(valid, dtype=np.uint8))
    return GazeFrames(fx, fy, fv.astype(bool))


def read_samples_csv(path):
    """Read ``t_ms,x,y`` rows; empty cells become NaN."""
    t, xs, ys = [], [], []
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["t_ms", "x", "y"]:
            raise ValidationError("header", f"{path}: expected columns t_ms,x,y")
        for row in reader:
            if not row:
                continue
            t.append(int(row[0]))
            xs.append(float(row[1]) if row[1].strip() else np.nan)
            ys.append(float(row[2]) if len(row) > 2 and row[2].strip() else np.nan)
    return np.array(t, dtype=np.int64), np.array(xs), np.array(ys)


def assign_label(x: float, y: float, aoi: np.ndarray, taxonomy=Taxonomy.FINE13, valid: bool = True):
    """Label whose rectangle contains (x, y); smallest rectangle wins.

    Returns a label of ``taxonomy`` or None when no rectangle contains the
    point. Invalid frames must be filtered by the caller.
    """
    if not valid:
        raise ValidationError("frame", "cannot label an invalid frame")
    code = _assign_codes(np.array([x]), np.array([y]), aoi[None])[0]
    if code < 0:
        return None
    taxonomy = Taxonomy.parse(taxonomy)
    if taxonomy is Taxonomy.COARSE5:
        code = int(collapse_indices(code))
    return index_label(int(code), taxonomy)


def _assign_codes(x, y, aoi):
    x0, y0, x1, y1 = (aoi[..., k] for k in range(4))
    with np.errstate(invalid="ignore"):
        inside = (x[:, None] >= x0) & (x[:, None] < x1) & (y[:, None] >= y0) & (y[:, None] < y1)
    area = np.where(inside, (x1 - x0) * (y1 - y0), np.inf)
    # argmin keeps the lowest index among equal areas
    code = np.argmin(area, axis=1)
    return np.where(np.isfinite(area.min(axis=1)), code, NO_LABEL).astype(np.int64)


def assign_labels(frames: GazeFrames, aoi: np.ndarray, taxonomy=Taxonomy.FINE13) -> np.ndarray:
    """Vectorised labelling of a frame stream; invalid frames get NO_LABEL."""
    n = min(len(frames), len(aoi))
    codes = _assign_codes(frames.x[:n], frames.y[:n], aoi[:n])
    codes[~frames.valid[:n]] = NO_LABEL
    if Taxonomy.parse(taxonomy) is Taxonomy.COARSE5:
        codes = collapse_indices(codes)
    return codes


@dataclass
class WindowedDataset:
    """Windowed examples stored as shared frames plus window start offsets.

    Example ``i`` is ``frames[starts[i] : starts[i] + window]`` with target
    ``targets[i]`` (the label of the frame right after the window).
    """

    frames: np.ndarray
    starts: np.ndarray
    targets: np.ndarray
    participants: np.ndarray
    cohorts: np.ndarray
    stimuli: np.ndarray
    taxonomy: Taxonomy = Taxonomy.FINE13
    window: int = WINDOW
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.starts)

    @property
    def n_classes(self) -> int:
        return self.taxonomy.size

    def windows(self, idx=None) -> np.ndarray:
        starts = self.starts if idx is None else self.starts[idx]
        return self.frames[np.asarray(starts)[:, None] + np.arange(self.window)]

    @property
    def X(self) -> np.ndarray:
        return self.windows()

    def subset(self, idx) -> "WindowedDataset":
        idx = np.asarray(idx)
        if idx.dtype.kind not in "biu":
            idx = idx.astype(np.int64)  # an empty list arrives as float
        return WindowedDataset(self.frames, self.starts[idx], self.targets[idx], self.participants[idx],
                               self.cohorts[idx], self.stimuli[idx], self.taxonomy, self.window,
                               dict(self.meta))

    def with_targets(self, targets) -> "WindowedDataset":
        return WindowedDataset(self.frames, self.starts, np.asarray(targets, dtype=np.int64),
                               self.participants, self.cohorts, self.stimuli, self.taxonomy,
                               self.window, dict(self.meta))

    @classmethod
    def concat(cls, parts) -> "WindowedDataset":
        parts = list(parts)
        if not parts:
            raise ValidationError("datasets", "nothing to concatenate")
        tax = {p.taxonomy for p in parts}
        if len(tax) != 1 or len({p.window for p in parts}) != 1:
            raise ValidationError("taxonomy", "cannot mix taxonomies or window sizes")
        offsets = np.cumsum([0] + [len(p.frames) for p in parts[:-1]])
        return cls(
            np.concatenate([p.frames for p in parts]),
            np.concatenate([p.starts + o for p, o in zip(parts, offsets)]),
            np.concatenate([p.targets for p in parts]),
            np.concatenate([p.participants for p in parts]),
            np.concatenate([p.cohorts for p in parts]),
            np.concatenate([p.stimuli for p in parts]),
            parts[0].taxonomy, parts[0].window,
        )

    def save(self, path) -> None:
        meta = {"format": "gazekit-dataset", "version": 1, "taxonomy": self.taxonomy.value,
                "window": self.window, **self.meta}
        with open(path, "wb") as fh:
            np.savez(fh, frames=self.frames, starts=self.starts, targets=self.targets,
                     participants=self.participants.astype(str), cohorts=self.cohorts.astype(str),
                     stimuli=self.stimuli.astype(str), meta=np.array(json.dumps(meta, sort_keys=True)))

    @classmethod
    def load(cls, path) -> "WindowedDataset":
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            if meta.get("format") != "gazekit-dataset":
                raise ValidationError("format", f"{path} is not a gazekit dataset")
            extra = {k: v for k, v in meta.items()
                     if k not in ("format", "version", "taxonomy", "window")}
            return cls(z["frames"], z["starts"], z["targets"], z["participants"], z["cohorts"],
                       z["stimuli"], Taxonomy.parse(meta["taxonomy"]), int(meta["window"]), extra)


def build_dataset(features, labels, valid=None, window: int = WINDOW, step: int = 1,
                  participant: str = "p0", cohort: str = "child", stimulus: str = "animation",
                  taxonomy=Taxonomy.FINE13) -> WindowedDataset:
    """Slide a ``window``-frame window with stride ``step`` over one recording.

    A position is kept when its window frames and the following target frame
    are all valid and the target frame carries a label.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if features.ndim != 2 or features.shape[1] != N_FEATURES:
        raise ValidationError("features", f"expected (n, {N_FEATURES}) features, got {features.shape}")
    if len(features) != len(labels):
        raise ValidationError("labels", f"stream lengths differ: {len(features)} features vs {len(labels)} labels")
    valid = np.ones(len(labels), dtype=bool) if valid is None else np.asarray(valid, dtype=bool)
    if len(valid) != len(labels):
        raise ValidationError("valid", "validity flags must align with the label stream")
    if step < 1 or window < 1:
        raise ValidationError("step", "window and step must be >= 1")
    starts = kernels.window_starts(valid.astype(np.uint8), (labels >= 0).astype(np.uint8), window)
    if step > 1:
        starts = starts[starts % step == 0]
    n = len(starts)
    return WindowedDataset(
        features, starts.astype(np.int64), labels[starts + window],
        np.full(n, participant, dtype=object).astype(str),
        np.full(n, cohort, dtype=object).astype(str),
        np.full(n, stimulus, dtype=object).astype(str),
        Taxonomy.parse(taxonomy), window,
    )


def dataset_from_samples(features, aoi, x, y, taxonomy=Taxonomy.FINE13, **tags) -> WindowedDataset:
    """Full path for one recording: resample, label against AOIs, window."""
    frames = resample(x, y)
    n = len(features)
    if len(frames) < n:
        pad = n - len(frames)
        frames = GazeFrames(np.concatenate([frames.x, np.full(pad, np.nan)]),
                            np.concatenate([frames.y, np.full(pad, np.nan)]),
                            np.concatenate([frames.valid, np.zeros(pad, dtype=bool)]))
    labels = assign_labels(GazeFrames(frames.x[:n], frames.y[:n], frames.valid[:n]), aoi[:n], taxonomy)
    return build_dataset(features, labels, frames.valid[:n], taxonomy=taxonomy, **tags)
