"""Gaze-behaviour features and two-sample / paired t-tests.

The t-distribution tail is evaluated through the regularized incomplete beta
function (modified Lentz continued fraction), so no statistics package is
needed at run time.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .core import ValidationError

FEATURE_NAMES = ("max_label_frame", "total_label_shifts", "mean_label_frame")

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAX_ITER = 100_000


@dataclass(frozen=True)
class GazeFeatureSet:
    max_label_frame: int = 0
    total_label_shifts: int = 0
    mean_label_frame: float = 0.0

    def as_tuple(self):
        return (self.max_label_frame, self.total_label_shifts, self.mean_label_frame)


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: float
    p: float

    def to_dict(self) -> dict:
        return asdict(self)


def gaze_features(labels) -> GazeFeatureSet:
    """Run statistics of a per-frame label sequence.

    ``labels`` holds integer codes (negative = no label) or hashable labels
    with ``None`` for gaps. Gaps end a run and are not counted; a change of
    label across a gap is not a shift.
    """
    if isinstance(labels, np.ndarray) and labels.dtype.kind in "iu":
        codes = labels.astype(np.int64)
    else:
        # None marks a gap; other labels map to dense non-negative codes
        lookup = {}
        codes = np.array([-1 if lab is None or (isinstance(lab, (int, np.integer)) and lab < 0)
                          else lookup.setdefault(lab, len(lookup)) for lab in labels], dtype=np.int64)
    lengths, shifts = kernels.run_lengths(codes)
    if len(lengths) == 0:
        return GazeFeatureSet()
    return GazeFeatureSet(int(lengths.max()), int(shifts), float(lengths.mean()))


# ------------------------------------------------------- t distribution

def _betacf(a: float, b: float, x: float) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = _CF_TINY if abs(d) < _CF_TINY else d
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = _CF_TINY if abs(d) < _CF_TINY else d
        c = 1.0 + aa / c
        c = _CF_TINY if abs(c) < _CF_TINY else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = _CF_TINY if abs(d) < _CF_TINY else d
        c = 1.0 + aa / c
        c = _CF_TINY if abs(c) < _CF_TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if a <= 0 or b <= 0:
        raise ValidationError("beta", "shape parameters must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValidationError("x", "x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, 1.0 - x) / b


def students_df(df: float) -> float:
    """Validate a degrees-of-freedom value and return it as a float."""
    df = float(df)
    if not df > 0 or math.isnan(df):
        raise ValidationError("df", f"degrees of freedom must be positive, got {df}")
    return df


def t_sf(t: float, df: float) -> float:
    """Upper tail P(T > t) of Student's t with ``df`` degrees of freedom."""
    df = students_df(df)
    if math.isnan(t):
        raise ValidationError("t", "t statistic is NaN")
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    x = df / (df + t * t)
    half = 0.5 * betainc(0.5 * df, 0.5, x)
    return half if t >= 0 else 1.0 - half


def t_two_sided(t: float, df: float) -> float:
    df = students_df(df)
    if math.isinf(t):
        return 0.0
    return min(1.0, betainc(0.5 * df, 0.5, df / (df + t * t)))


# ------------------------------------------------------------- t-tests

def welch_ttest_summary(m1, sd1, n1, m2, sd2, n2) -> TTestResult:
    """Welch's unequal-variance test from summary statistics.

    Degenerate case: with both SDs zero the result is p = 1 for equal means
    and p = 0 (t = +/-inf) otherwise.
    """
    n1, n2 = int(n1), int(n2)
    if n1 < 2 or n2 < 2:
        raise ValidationError("n", "each sample needs at least 2 observations")
    if sd1 < 0 or sd2 < 0:
        raise ValidationError("sd", "standard deviations must be non-negative")
    v1, v2 = sd1 * sd1 / n1, sd2 * sd2 / n2
    diff = float(m1) - float(m2)
    if v1 + v2 == 0.0:
        df = float(n1 + n2 - 2)
        if diff == 0.0:
            return TTestResult(0.0, df, 1.0)
        return TTestResult(math.copysign(math.inf, diff), df, 0.0)
    t = diff / math.sqrt(v1 + v2)
    df = (v1 + v2) ** 2 / (v1 * v1 / (n1 - 1) + v2 * v2 / (n2 - 1))
    return TTestResult(t, df, t_two_sided(t, df))


def _summary(xs):
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 1 or len(xs) < 2:
        raise ValidationError("sample", "each sample needs at least 2 observations")
    return float(xs.mean()), float(xs.std(ddof=1)), len(xs)


def welch_ttest_samples(xs, ys) -> TTestResult:
    return welch_ttest_summary(*_summary(xs), *_summary(ys))


def paired_ttest(before, after) -> TTestResult:
    """One-sample t-test on ``before - after`` with n - 1 degrees of freedom."""
    before = np.asarray(before, dtype=np.float64)
    after = np.asarray(after, dtype=np.float64)
    if before.shape != after.shape or before.ndim != 1:
        raise ValidationError("paired", "paired samples must be 1-D and equally long")
    if len(before) < 2:
        raise ValidationError("paired", "need at least 2 pairs")
    d = before - after
    n = len(d)
    mean, sd = float(d.mean()), float(d.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(0.0, n - 1.0, 1.0)
        return TTestResult(math.copysign(math.inf, mean), n - 1.0, 0.0)
    t = mean / (sd / math.sqrt(n))
    return TTestResult(t, n - 1.0, t_two_sided(t, n - 1.0))


# ------------------------------------------------------------ reports

def feature_table(records) -> list:
    """Rows of (participant, cohort, stimulus, features...) from label streams.

    ``records`` yields ``(participant, cohort, stimulus, labels)``.
    """
    rows = []
    for participant, cohort, stimulus, labels in records:
        f = gaze_features(labels)
        rows.append({"participant": participant, "cohort": cohort, "stimulus": stimulus,
                     **asdict(f)})
    return rows


def write_feature_table(path, rows) -> None:
    fields = ["participant", "cohort", "stimulus", *FEATURE_NAMES]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: row[k] for k in fields})


def compare_groups(rows, by: str, group_a: str, group_b: str, within: str) -> list:
    """Welch tests of every feature between two groups, split by ``within``.

    ``by="cohort"``, ``within="stimulus"`` gives the children-vs-adults table;
    ``by="stimulus"``, ``within="cohort"`` gives the stimulus comparison.
    """
    out = []
    for level in sorted({r[within] for r in rows}):
        sub = [r for r in rows if r[within] == level]
        for feat in FEATURE_NAMES:
            a = [r[feat] for r in sub if r[by] == group_a]
            b = [r[feat] for r in sub if r[by] == group_b]
            if len(a) < 2 or len(b) < 2:
                continue
            res = welch_ttest_samples(a, b)
            (ma, sa, na), (mb, sb, nb) = _summary(a), _summary(b)
            out.append({"feature": feat, within: level, "group_a": group_a, "mean_a": ma, "sd_a": sa,
                        "n_a": na, "group_b": group_b, "mean_b": mb, "sd_b": sb, "n_b": nb,
                        **res.to_dict()})
    return out


SUMMARY_COLUMNS = ("feature", "condition", "mean_a", "sd_a", "n_a", "mean_b", "sd_b", "n_b")


def read_summary_csv(path) -> list:
    """Summary rows (feature, condition, mean/sd/n for two groups)."""
    with open(path, encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(SUMMARY_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValidationError("header", f"{path}: missing columns {sorted(missing)}")
        rows = []
        for row in reader:
            rows.append({"feature": row["feature"], "condition": row["condition"],
                         **{k: float(row[k]) for k in SUMMARY_COLUMNS[2:]}})
    return rows


def summary_tests(rows) -> list:
    out = []
    for r in rows:
        res = welch_ttest_summary(r["mean_a"], r["sd_a"], r["n_a"], r["mean_b"], r["sd_b"], r["n_b"])
        out.append({**r, **res.to_dict()})
    return out


def write_test_report(path, rows) -> None:
    if not rows:
        fields = ["feature", "t", "df", "p"]
    else:
        fields = list(rows[0])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
