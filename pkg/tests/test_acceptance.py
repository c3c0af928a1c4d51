"""Acceptance criteria, each at its stated tolerance.

Every test is tagged with ``criterion(number, title)``; the terminal summary
prints one PASS/FAIL line per criterion with the measured values.
"""
import functools
import hashlib
import io
import json
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from gazekit.cli import main as cli_main
from gazekit.controller import GREETING, run_stream, scenario_to_wire
from gazekit.core import N_FEATURES, WINDOW
from gazekit.eval import audit_leakage, make_folds, model_similarity, run_cv
from gazekit.models import build_model, param_count
from gazekit.preprocess import resample
from gazekit.stats import welch_ttest_summary

import acceptance_data as ad
from gradcheck import check_model

C1 = (1, "parameter-count oracles")
C2 = (2, "gradient correctness")
C3 = (3, "resampling exactness")
C4 = (4, "statistics fixtures")
C5 = (5, "learnability on synthetic oracles")
C6 = (6, "cross-validation hygiene")
C7 = (7, "controller real-time and determinism")
C8 = (8, "determinism")


# ---------------------------------------------------------------- shared runs

@functools.lru_cache(maxsize=None)
def _render():
    return ad.rendering()


@functools.lru_cache(maxsize=None)
def _cv(arch, mode, cohort="child"):
    ds = ad.cohort_dataset(_render(), cohort, mode)
    start = time.perf_counter()
    report = run_cv(ds, arch, ad.CONFIG)
    return report, ds, time.perf_counter() - start


# ------------------------------------------------------------------------ 1

@pytest.mark.criterion(*C1)
@pytest.mark.parametrize("arch,taxonomy,expected", [
    ("lstm", "fine13", 57_677),
    ("transformer", "fine13", 66_193),
    ("transformer", "coarse5", 65_961),
    ("lstm", "coarse5", 57_157),
])
def test_c1_parameter_counts(criterion, arch, taxonomy, expected):
    n = param_count(build_model(arch, taxonomy))
    criterion(f"{arch}/{taxonomy}={n}")
    assert n == expected


# ------------------------------------------------------------------------ 2

@pytest.mark.criterion(*C2)
@pytest.mark.parametrize("arch", ["lstm", "transformer"])
def test_c2_gradient_check(criterion, arch):
    rng = np.random.default_rng(2024)
    X = rng.random((3, WINDOW, N_FEATURES))
    y = np.array([0, 5, 12])
    model = build_model(arch, "fine13", seed=1)
    start = time.perf_counter()
    errs = check_model(model, X, y, seed=0)
    elapsed = time.perf_counter() - start
    worst = max(max(v) for v in errs.values())
    criterion(f"{arch} worst rel err {worst:.1e} over {len(errs)} blocks in {elapsed:.0f}s")
    assert set(errs) == set(model.params)
    assert worst < 1e-4
    assert elapsed < 300


# ------------------------------------------------------------------------ 3

@pytest.mark.criterion(*C3)
def test_c3_resampling(criterion):
    rng = np.random.default_rng(3)
    x = rng.uniform(0, 1919, 120_000)
    frames = resample(x, rng.uniform(0, 1079, 120_000))
    ramp = np.arange(100, dtype=np.float64)
    r = resample(ramp, ramp)
    criterion(f"{len(frames)} frames; ramp -> {tuple(float(v) for v in r.x)}")
    assert len(frames) == 3600 and frames.valid.all()
    assert tuple(r.x) == (16.0, 49.0, 82.5)


# ------------------------------------------------------------------------ 4

# children vs adults, n = 12 per group: summary rows and published p-values
GROUP_ROWS = [
    ("animation max label frame", (203.3, 79.6), (286.0, 119.0), 0.060, 0.005),
    ("animation total label shifts", (108.2, 22.2), (79.0, 31.6), 0.017, 0.005),
    ("animation mean label frame", (26.4, 7.1), (44.9, 20.6), 0.012, 0.005),
    ("live-action mean label frame", (30.0, 8.0), (49.0, 28.9), 0.048, 0.010),
]


@pytest.mark.criterion(*C4)
@pytest.mark.parametrize("name,a,b,expected,tol", GROUP_ROWS, ids=[r[0] for r in GROUP_ROWS])
def test_c4_table_rows(criterion, name, a, b, expected, tol):
    p = welch_ttest_summary(a[0], a[1], 12, b[0], b[1], 12).p
    criterion(f"{name} p={p:.4f}")
    assert abs(p - expected) <= tol


@pytest.mark.criterion(*C4)
def test_c4_live_action_shifts_numeric_oracle(criterion):
    import scipy.stats
    ours = welch_ttest_summary(103.2, 25.3, 12, 78.5, 33.7, 12).p
    oracle = scipy.stats.ttest_ind_from_stats(103.2, 25.3, 12, 78.5, 33.7, 12, equal_var=False).pvalue
    criterion(f"live-action shifts p={ours:.4f} (oracle {oracle:.4f}, printed 0.046)")
    assert abs(ours - oracle) < 1e-9
    assert abs(ours - 0.056) <= 0.002


# ------------------------------------------------------------------------ 5

@pytest.mark.slow
@pytest.mark.criterion(*C5)
@pytest.mark.parametrize("arch", ["lstm", "transformer"])
def test_c5_learnability(criterion, arch):
    det, det_ds, t_det = _cv(arch, "deterministic")
    sto, sto_ds, t_sto = _cv(arch, "stochastic")
    det_k = ad.aggregate_topk(det)
    sto_k = ad.aggregate_topk(sto)
    majority = ad.majority_baseline(sto, sto_ds)
    L = det_ds.n_classes
    criterion(f"{arch}: deterministic top1 {det_k[0]:.3f}; stochastic top1 {sto_k[0]:.3f} "
              f"top2 {sto_k[1]:.3f} majority {majority:.3f}; {t_det + t_sto:.0f}s")
    assert det_k[0] >= 0.90
    assert sto_k[0] - majority >= 0.10
    assert sto_k[1] > sto_k[0]
    for report in (det, sto):
        m = report.topk_matrix
        assert np.all(np.diff(m, axis=1) >= 0)
        assert m.shape[1] == L and np.all(m[:, -1] == 1.0)
    assert t_det + t_sto <= 15 * 60


# ------------------------------------------------------------------------ 6

@pytest.mark.slow
@pytest.mark.criterion(*C6)
def test_c6_no_participant_leakage(criterion):
    reports = [_cv(arch, mode)[0] for arch in ("lstm", "transformer")
               for mode in ("deterministic", "stochastic")]
    leaks = [leak for r in reports for leak in audit_leakage(r)]
    ds = _cv("lstm", "stochastic")[1]
    plan_leaks = audit_leakage(make_folds(ds.participants, 6, ad.CONFIG.seed), ds)
    folds_checked = sum(len(r.folds) for r in reports)
    criterion(f"{folds_checked} folds audited, {len(leaks) + len(plan_leaks)} leaks")
    assert leaks == [] and plan_leaks == []
    for r in reports:
        tested = [p for f in r.folds for p in f.test_participants]
        assert len(tested) == len(set(tested)) == 12


@pytest.mark.slow
@pytest.mark.criterion(*C6)
def test_c6_similarity_pairs(criterion):
    child = _cv("lstm", "stochastic", "child")[0]
    adult = _cv("lstm", "stochastic", "adult")[0]
    probe = _cv("lstm", "deterministic")[1]
    result = model_similarity(child.models, adult.models, probe)
    criterion(f"{result.n_pairs} pairs, mean agreement {result.mean:.3f}")
    assert len(child.models) == len(adult.models) == 6
    assert result.n_pairs == 36 and result.matrix.shape == (6, 6)


# ------------------------------------------------------------------------ 7

def _expected_greetings(frames, cooldown_ms=5000):
    """Rising-edge and cooldown oracle over the scripted waving flags."""
    times, last, prev = [], None, [0, 0, 0, 0]
    for i, f in enumerate(frames):
        t = i * 1000 // 30
        now = [int(p.present and p.waving) for p in f.persons]
        edge = any(n and not q for n, q in zip(now, prev))
        prev = now
        if edge and (last is None or t - last >= cooldown_ms):
            times.append(t)
            last = t
    return times


@pytest.mark.slow
@pytest.mark.criterion(*C7)
def test_c7_controller_replay(criterion):
    model = _cv("lstm", "deterministic")[0].models[0]
    wire = scenario_to_wire(_render().frames)
    outputs, stats = [], None
    for _ in range(2):
        sink = io.StringIO()
        stats = run_stream(wire, sink, model)
        outputs.append(sink.getvalue())
    cmds = [json.loads(line) for line in outputs[0].splitlines()]
    said = [c["t"] for c in cmds if c["say"] == GREETING]
    expected = _expected_greetings(_render().frames)
    criterion(f"mean latency {stats.mean_latency_ms:.2f} ms, {stats.neutral} neutral + "
              f"{stats.predicted} predicted, {len(said)} greetings, identical={outputs[0] == outputs[1]}")
    assert stats.mean_latency_ms < 33.0
    assert (stats.neutral, stats.predicted) == (30, 3570)
    assert all(not c["predicted"] for c in cmds[:30]) and all(c["predicted"] for c in cmds[30:])
    assert said == expected and len(said) > 1
    assert all(b - a >= 5000 for a, b in zip(said, said[1:]))
    assert outputs[0] == outputs[1]


# ------------------------------------------------------------------------ 8

def _digest(root, skip=()):
    h = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file() and p.name not in skip):
        h.update(str(path.relative_to(root)).encode())
        h.update(path.read_bytes())
    return h.hexdigest()


def _pipeline(root):
    """Every subcommand once, with small inputs; returns per-step digests."""
    steps = [
        ("generate", ["generate", "--out", "{r}/child", "--segments", "4", "--participants", "4",
                      "--samples", "--blink-rate", "0.005", "--jitter", "2", "--seed", "3"]),
        ("generate", ["generate", "--out", "{r}/adult", "--segments", "4", "--participants", "4",
                      "--cohort", "adult", "--seed", "4"]),
        ("preprocess", ["preprocess", "{r}/child", "{r}/adult", "--taxonomy", "coarse5", "--step", "6",
                        "--out", "{r}/data"]),
        ("train", ["train", "--dataset", "{r}/data/dataset.npz", "--out", "{r}/train", "--max-epochs", "2",
                   "--seed", "1"]),
        ("eval", ["eval", "--dataset", "{r}/data/dataset.npz", "--out", "{r}/eval", "--folds", "2",
                  "--max-epochs", "1", "--arch", "transformer"]),
        ("similarity", ["similarity", "--models-a", "{r}/eval/models", "--models-b", "{r}/train/model.npz",
                        "--probe", "{r}/data/dataset.npz", "--out", "{r}/sim"]),
        ("stats", ["stats", "{r}/child", "{r}/adult", "--out", "{r}/stats"]),
        ("run", ["run", "--model", "{r}/train/model.npz", "--replay", "{r}/child", "--output",
                 "{r}/run/commands.ndjson", "--stats", "{r}/runstats/stats.json"]),
    ]
    digests = {}
    for name, argv in steps:
        assert cli_main([a.format(r=root) for a in argv]) == 0
    for sub in ("child", "adult", "data", "train", "eval", "sim", "stats", "run"):
        # config.json echoes absolute output paths, so it is compared per root
        digests[sub] = _digest(root / sub, skip=("config.json",))
    return digests


@pytest.mark.slow
@pytest.mark.criterion(*C8)
def test_c8_repeated_subcommands_are_checksum_identical(criterion, tmp_path):
    first = _pipeline(tmp_path / "a")
    second = _pipeline(tmp_path / "b")
    same = [k for k in first if first[k] == second[k]]
    criterion(f"{len(same)}/{len(first)} output trees identical")
    assert first == second
    cfg_a = json.loads((tmp_path / "a" / "eval" / "config.json").read_text())
    cfg_b = json.loads((tmp_path / "b" / "eval" / "config.json").read_text())
    for cfg in (cfg_a, cfg_b):
        cfg.pop("dataset"), cfg.pop("out")
    assert cfg_a == cfg_b


_BACKEND_PROBE = r"""
import json, sys
sys.path.insert(0, sys.argv[1])
import numpy as np
from gazekit import kernels
from gazekit.eval import run_cv
from gazekit.models import TrainConfig
import acceptance_data as ad
ds = ad.cohort_dataset(ad.rendering(), "child", "stochastic", n=4, step=24)
rep = run_cv(ds, "lstm", TrainConfig(max_epochs=2, seed=5), k=2)
probe = ds.X[:64]
print(json.dumps({"backend": kernels.BACKEND, "topk": rep.topk_matrix.tolist(),
                  "probs": rep.models[0].forward(probe).tolist()}))
"""


@pytest.mark.slow
@pytest.mark.criterion(*C8)
def test_c8_metrics_agree_across_kernel_backends(criterion):
    from gazekit import kernels
    if "cython" not in kernels.available_backends():
        pytest.skip("compiled backend not built")
    here = os.path.dirname(__file__)
    runs = {}
    for flag in ("0", "1"):
        env = dict(os.environ, GAZEKIT_PURE_PYTHON=flag)
        out = subprocess.run([sys.executable, "-c", _BACKEND_PROBE, here], env=env, capture_output=True,
                             text=True, check=True)
        rec = json.loads(out.stdout.strip().splitlines()[-1])
        runs[rec["backend"]] = rec
    assert set(runs) == {"cython", "python"}
    d_topk = np.abs(np.array(runs["cython"]["topk"]) - np.array(runs["python"]["topk"])).max()
    d_prob = np.abs(np.array(runs["cython"]["probs"]) - np.array(runs["python"]["probs"])).max()
    criterion(f"backend agreement: top-k {d_topk:.1e}, probabilities {d_prob:.1e}")
    assert d_topk <= 1e-6 and d_prob <= 1e-6
