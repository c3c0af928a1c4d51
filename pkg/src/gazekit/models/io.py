"""Versioned model files: one ``.npz`` holding weights plus a JSON header."""
from __future__ import annotations

import json

import numpy as np

from ..core import Taxonomy, ValidationError, normalization_constants
from .lstm import LSTMClassifier, lstm_param_count
from .transformer import TransformerClassifier, transformer_param_count
from .training import TrainConfig

MODEL_FORMAT = "gazekit-model"
MODEL_VERSION = 1
ARCHITECTURES = {"lstm": LSTMClassifier, "transformer": TransformerClassifier}


def build_model(architecture: str, taxonomy=Taxonomy.FINE13, seed: int = 0):
    try:
        cls = ARCHITECTURES[architecture.lower()]
    except KeyError:
        raise ValidationError("architecture", f"unknown architecture {architecture!r}") from None
    return cls(taxonomy, seed=seed)


def expected_param_count(architecture: str, taxonomy) -> int:
    n = Taxonomy.parse(taxonomy).size
    if architecture == "lstm":
        return lstm_param_count(n)
    if architecture == "transformer":
        return transformer_param_count(n)
    raise ValidationError("architecture", f"unknown architecture {architecture!r}")


def save_model(path, model, config: TrainConfig | None = None, extra: dict | None = None) -> None:
    header = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "architecture": model.architecture,
        "taxonomy": model.taxonomy.value,
        "param_count": model.param_count(),
        "param_names": list(model.params),
        "hyperparameters": (config or TrainConfig()).to_dict(),
        "normalization": normalization_constants(),
        **(extra or {}),
    }
    arrays = {f"w{i}": v for i, v in enumerate(model.params.values())}
    with open(path, "wb") as fh:
        np.savez(fh, header=np.array(json.dumps(header, sort_keys=True)), **arrays)


def load_model(path):
    """Return ``(model, header)``; the stored parameter count must match the architecture."""
    with np.load(path, allow_pickle=False) as z:
        header = json.loads(str(z["header"]))
        if header.get("format") != MODEL_FORMAT or header.get("version") != MODEL_VERSION:
            raise ValidationError("format", f"{path} is not a v{MODEL_VERSION} gazekit model")
        model = build_model(header["architecture"], header["taxonomy"])
        names = header["param_names"]
        if names != list(model.params):
            raise ValidationError("params", "parameter layout does not match the architecture")
        for i, name in enumerate(names):
            arr = z[f"w{i}"]
            if arr.shape != model.params[name].shape:
                raise ValidationError(name, f"shape {arr.shape} != {model.params[name].shape}")
            model.params[name] = arr.astype(np.float64)
    expected = expected_param_count(model.architecture, model.taxonomy)
    if model.param_count() != expected or header["param_count"] != expected:
        raise ValidationError("param_count", f"model has {model.param_count()} parameters, expected {expected}")
    return model, header
