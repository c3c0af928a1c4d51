"""Participant-grouped K-fold cross-validation, top-k scoring, model similarity."""
from __future__ import annotations

import csv
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import ValidationError
from .models import TrainConfig, build_model, predict_dataset, rank_labels, train

K_FOLDS = 6


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: dict  # participant -> fold index

    def fold_participants(self, fold: int) -> list:
        return sorted(p for p, f in self.assignment.items() if f == fold)

    def sizes(self) -> list:
        return [len(self.fold_participants(f)) for f in range(self.k)]


def make_folds(participants, k: int = K_FOLDS, seed: int = 0) -> FoldPlan:
    """Shuffle the distinct participants with ``seed`` and deal them round-robin."""
    unique = sorted(set(str(p) for p in participants))
    if k < 2:
        raise ValidationError("k", "need at least 2 folds")
    if len(unique) < k:
        raise ValidationError("participants", f"{len(unique)} participants cannot fill {k} folds")
    order = np.random.default_rng(seed).permutation(len(unique))
    return FoldPlan(k, {unique[j]: i % k for i, j in enumerate(order)})


def topk_accuracy(rankings, targets, k: int) -> float:
    """Fraction of targets found among the first ``k`` entries of their ranking."""
    if k < 1:
        raise ValidationError("k", "k must be >= 1")
    if len(rankings) != len(targets):
        raise ValidationError("rankings", f"{len(rankings)} rankings for {len(targets)} targets")
    if len(targets) == 0:
        return float("nan")
    hits = sum(t in list(r[:k]) for r, t in zip(rankings, targets))
    return hits / len(targets)


def topk_curve(probs, targets) -> np.ndarray:
    """Top-k accuracy for every k = 1..L from a probability matrix."""
    probs = np.asarray(probs)
    targets = np.asarray(targets)
    ranks = rank_labels(probs)
    # position of the target within each ranking
    pos = np.argmax(ranks == targets[:, None], axis=1)
    counts = np.bincount(pos, minlength=probs.shape[1])
    return np.cumsum(counts) / len(targets)


def confusion_matrix(targets, predictions, n_classes: int) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(targets), np.asarray(predictions)), 1)
    return cm


@dataclass
class FoldResult:
    fold: int
    train_participants: list
    test_participants: list
    n_train: int
    n_test: int
    topk: np.ndarray
    confusion: np.ndarray
    best_epoch: int
    stopped_epoch: int


@dataclass
class EvalReport:
    architecture: str
    taxonomy: str
    folds: list
    models: list = field(default_factory=list, repr=False)

    @property
    def topk_matrix(self) -> np.ndarray:
        return np.stack([f.topk for f in self.folds])

    @property
    def mean(self) -> np.ndarray:
        return self.topk_matrix.mean(axis=0)

    @property
    def sd(self) -> np.ndarray:
        m = self.topk_matrix
        return m.std(axis=0, ddof=1) if len(m) > 1 else np.zeros(m.shape[1])

    @property
    def confusion(self) -> np.ndarray:
        return sum(f.confusion for f in self.folds)

    def summary(self) -> dict:
        return {"architecture": self.architecture, "taxonomy": self.taxonomy,
                "n_examples": int(sum(f.n_test for f in self.folds)),
                "top1_mean": float(self.mean[0]), "top1_sd": float(self.sd[0]),
                "top2_mean": float(self.mean[1]), "top2_sd": float(self.sd[1]),
                "top3_mean": float(self.mean[min(2, len(self.mean) - 1)]),
                "top3_sd": float(self.sd[min(2, len(self.sd) - 1)])}


def split_fold(dataset, plan: FoldPlan, fold: int):
    test_mask = np.isin(dataset.participants, plan.fold_participants(fold))
    return dataset.subset(np.flatnonzero(~test_mask)), dataset.subset(np.flatnonzero(test_mask))


def _run_fold(args):
    dataset, plan, fold, architecture, config = args
    train_set, test_set = split_fold(dataset, plan, fold)
    if len(test_set) == 0 or len(train_set) == 0:
        raise ValidationError("fold", f"fold {fold} has no test or no training examples")
    fold_config = replace(config, seed=config.seed + fold)
    model = build_model(architecture, dataset.taxonomy, seed=fold_config.seed)
    model, history = train(model, train_set, test_set, fold_config)
    probs = predict_dataset(model, test_set)
    result = FoldResult(
        fold=fold,
        train_participants=sorted(set(train_set.participants.tolist())),
        test_participants=sorted(set(test_set.participants.tolist())),
        n_train=len(train_set), n_test=len(test_set),
        topk=topk_curve(probs, test_set.targets),
        confusion=confusion_matrix(test_set.targets, probs.argmax(axis=1), model.n_classes),
        best_epoch=history.best_epoch, stopped_epoch=history.stopped_epoch,
    )
    return result, model


def run_cv(dataset, architecture: str, config: TrainConfig = TrainConfig(), k: int = K_FOLDS,
           jobs: int = 1, plan: FoldPlan | None = None) -> EvalReport:
    """Train one model per fold on the other folds and score it on the held-out fold.

    Fold ``i`` trains with seed ``config.seed + i``, so results do not depend
    on ``jobs``.
    """
    if len(dataset) == 0:
        raise ValidationError("dataset", "dataset is empty")
    plan = plan or make_folds(dataset.participants, k, config.seed)
    tasks = [(dataset, plan, f, architecture, config) for f in range(plan.k)]
    for _, p, f, _, _ in tasks:
        if not np.isin(dataset.participants, p.fold_participants(f)).any():
            raise ValidationError("fold", f"fold {f} has no examples")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_fold, tasks))
    else:
        outcomes = [_run_fold(t) for t in tasks]
    return EvalReport(architecture, dataset.taxonomy.value,
                      [r for r, _ in outcomes], [m for _, m in outcomes])


def audit_leakage(report_or_plan, dataset=None) -> list:
    """Participants seen on both sides of any fold (empty list = clean).

    Accepts an EvalReport, or a FoldPlan together with the dataset it splits.
    """
    leaks = []
    if isinstance(report_or_plan, FoldPlan):
        folds = []
        for f in range(report_or_plan.k):
            tr, te = split_fold(dataset, report_or_plan, f)
            folds.append((f, set(tr.participants.tolist()), set(te.participants.tolist())))
    else:
        folds = [(r.fold, set(r.train_participants), set(r.test_participants))
                 for r in report_or_plan.folds]
    for fold, tr, te in folds:
        leaks.extend((fold, p) for p in sorted(tr & te))
    return leaks


@dataclass(frozen=True)
class SimilarityResult:
    matrix: np.ndarray
    mean: float
    sd: float

    @property
    def n_pairs(self) -> int:
        return int(self.matrix.size)


def model_similarity(models_a, models_b, probe) -> SimilarityResult:
    """Argmax agreement on ``probe`` windows for every (a, b) model pair."""
    models_a, models_b = list(models_a), list(models_b)
    if not models_a or not models_b:
        raise ValidationError("models", "both model sets must be non-empty")
    taxonomies = {m.taxonomy for m in models_a + models_b}
    if len(taxonomies) != 1:
        raise ValidationError("taxonomy", "model sets use different taxonomies")
    X = probe.X if hasattr(probe, "windows") else np.asarray(probe)
    if len(X) == 0:
        raise ValidationError("probe", "probe set is empty")
    pa = [m.predict_proba(X).argmax(axis=1) for m in models_a]
    pb = [m.predict_proba(X).argmax(axis=1) for m in models_b]
    matrix = np.array([[np.mean(a == b) for b in pb] for a in pa])
    sd = float(matrix.std(ddof=1)) if matrix.size > 1 else 0.0
    return SimilarityResult(matrix, float(matrix.mean()), sd)


# --------------------------------------------------------------- output

def write_report_csv(path, report: EvalReport) -> None:
    L = len(report.mean)
    topk_cols = [f"top{k}" for k in range(1, L + 1)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fold", "test_participants", "n_train", "n_test", "best_epoch", "stopped_epoch",
                    *topk_cols])
        for r in report.folds:
            w.writerow([r.fold, ";".join(r.test_participants), r.n_train, r.n_test, r.best_epoch,
                        r.stopped_epoch, *(repr(float(v)) for v in r.topk)])
        for name, vals in (("mean", report.mean), ("sd", report.sd)):
            w.writerow([name, "", "", sum(r.n_test for r in report.folds), "", "",
                        *(repr(float(v)) for v in vals)])


def write_plot_data(path, report: EvalReport) -> None:
    """Accuracy against number of attempts: one row per k."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["attempts", "mean_accuracy", "sd_accuracy",
                    *(f"fold{r.fold}" for r in report.folds)])
        for k in range(len(report.mean)):
            w.writerow([k + 1, repr(float(report.mean[k])), repr(float(report.sd[k])),
                        *(repr(float(r.topk[k])) for r in report.folds)])


def write_confusion_csv(path, report: EvalReport, labels) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["true\\predicted", *labels])
        for name, row in zip(labels, report.confusion):
            w.writerow([name, *row.tolist()])


def write_similarity_csv(path, result: SimilarityResult) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model_a", "model_b", "agreement"])
        for i, j in itertools.product(range(result.matrix.shape[0]), range(result.matrix.shape[1])):
            w.writerow([i, j, repr(float(result.matrix[i, j]))])
        w.writerow(["mean", "", repr(result.mean)])
        w.writerow(["sd", "", repr(result.sd)])
