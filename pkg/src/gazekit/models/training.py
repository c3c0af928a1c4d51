"""Mini-batch Adam training with early stopping on held-out accuracy."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from ..core import ValidationError
from .common import Adam, cross_entropy, rank_labels

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 20
    max_epochs: int = 100
    patience: int = 10
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    loss: str = "categorical_crossentropy"
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass
class History:
    train_loss: list = field(default_factory=list)
    train_accuracy: list = field(default_factory=list)
    test_loss: list = field(default_factory=list)
    test_accuracy: list = field(default_factory=list)
    best_epoch: int = -1
    stopped_epoch: int = -1

    def to_dict(self) -> dict:
        return asdict(self)


def early_stopping_epoch(accuracies, patience: int) -> tuple:
    """(best_epoch, stop_epoch) for an accuracy trace, 0-based.

    Training stops after ``patience`` consecutive epochs without a strict
    improvement over the best accuracy so far.
    """
    best, best_epoch, wait = -np.inf, -1, 0
    for epoch, acc in enumerate(accuracies):
        if acc > best:
            best, best_epoch, wait = acc, epoch, 0
        else:
            wait += 1
            if wait >= patience:
                return best_epoch, epoch
    return best_epoch, len(accuracies) - 1


def evaluate(model, dataset, chunk: int = 512) -> tuple:
    """Mean cross-entropy and top-1 accuracy over a dataset."""
    probs = predict_dataset(model, dataset, chunk)
    acc = float(np.mean(probs.argmax(axis=1) == dataset.targets))
    return cross_entropy(probs, dataset.targets), acc


def predict_dataset(model, dataset, chunk: int = 512) -> np.ndarray:
    out = np.empty((len(dataset), model.n_classes))
    for i in range(0, len(dataset), chunk):
        idx = np.arange(i, min(i + chunk, len(dataset)))
        out[idx] = model.forward(dataset.windows(idx))
    return out


def train(model, train_set, test_set, config: TrainConfig = TrainConfig()):
    """Train ``model`` in place and return ``(best_model, history)``.

    The held-out set drives early stopping; the returned model carries the
    weights of the best held-out epoch.
    """
    if len(train_set) == 0 or len(test_set) == 0:
        raise ValidationError("dataset", "train and test splits must be non-empty")
    for ds in (train_set, test_set):
        if ds.taxonomy is not model.taxonomy:
            raise ValidationError("taxonomy", f"dataset is {ds.taxonomy.value}, model is {model.taxonomy.value}")
    rng = np.random.default_rng(config.seed)
    opt = Adam(model.params, config.learning_rate, config.beta1, config.beta2, config.epsilon)
    history = History()
    best_acc, best_params, wait = -np.inf, None, 0
    n = len(train_set)
    for epoch in range(config.max_epochs):
        order = rng.permutation(n)
        total_loss, correct = 0.0, 0
        for i in range(0, n, config.batch_size):
            idx = order[i:i + config.batch_size]
            X = train_set.windows(idx)
            y = train_set.targets[idx]
            loss, grads, probs = model.loss_grads_probs(X, y)
            opt.step(model.params, grads)
            total_loss += loss * len(idx)
            correct += int(np.sum(probs.argmax(axis=1) == y))
        train_loss, train_acc = total_loss / n, correct / n
        test_loss, test_acc = evaluate(model, test_set)
        history.train_loss.append(train_loss)
        history.train_accuracy.append(train_acc)
        history.test_loss.append(test_loss)
        history.test_accuracy.append(test_acc)
        log.debug("epoch %d loss %.4f test_acc %.4f", epoch, train_loss, test_acc)
        if test_acc > best_acc:
            best_acc, wait = test_acc, 0
            best_params = {k: v.copy() for k, v in model.params.items()}
            history.best_epoch = epoch
        else:
            wait += 1
            if wait >= config.patience:
                break
    history.stopped_epoch = epoch
    model.params = best_params
    return model, history


def predict_topk(model, window, k: int):
    """Top-k labels for one window, most probable first (ties: lower index first)."""
    if not 1 <= k <= model.n_classes:
        raise ValidationError("k", f"k must lie in 1..{model.n_classes}")
    probs = model.forward(window)[0]
    return [model.taxonomy.labels(int(i)) for i in rank_labels(probs)[:k]]
