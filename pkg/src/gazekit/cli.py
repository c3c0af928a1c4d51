"""``gazekit`` command line: generate, preprocess, train, eval, similarity, stats, run.

Exit codes: 0 success, 1 validation failure, 2 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .core import Taxonomy, ValidationError, collapse_indices, read_feature_file, write_feature_file
from .preprocess import COHORTS, STIMULI, WindowedDataset, build_dataset, dataset_from_samples, read_samples_csv
from .scenario import (
    OraclePolicy, build_script, cohort_policy, oracle_gaze, read_aoi_file, read_label_file,
    render_frames, script_to_config, synthesize_samples, write_aoi_file, write_label_file,
    write_samples_file,
)

log = logging.getLogger("gazekit")

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 1, 2


def _write_config(out: Path, args: argparse.Namespace, **extra) -> None:
    out.mkdir(parents=True, exist_ok=True)
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    cfg.update(extra)
    cfg["gazekit_version"] = __version__
    (out / "config.json").write_text(json.dumps(cfg, sort_keys=True, indent=2, default=str) + "\n")


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True, default=float))


def _train_config(args):
    from .models import TrainConfig
    return TrainConfig(max_epochs=args.max_epochs, patience=args.patience, batch_size=args.batch_size,
                       learning_rate=args.lr, seed=args.seed)


# -------------------------------------------------------------- generate

def _script_config(args) -> dict:
    if args.config:
        return json.loads(Path(args.config).read_text())
    if args.random_segments:
        return {"random": {"n_segments": args.random_segments}, "stimulus": args.stimulus}
    cfg = script_to_config(build_script({"canonical": args.stimulus}))
    if args.segments:
        if not 1 <= args.segments <= len(cfg["segments"]):
            raise ValidationError("segments", f"--segments must lie in 1..{len(cfg['segments'])}")
        cfg["segments"] = cfg["segments"][:args.segments]
    return cfg


def cmd_generate(args) -> int:
    out = Path(args.out)
    script = build_script(_script_config(args), seed=args.seed)
    rendering = render_frames(script)
    _write_config(out, args)
    (out / "scenario.json").write_text(json.dumps(script_to_config(script), sort_keys=True, indent=2) + "\n")
    write_feature_file(out / "features.csv", rendering.features,
                       extra={"stimulus": script.stimulus, "n_segments": len(script.segments)})
    write_aoi_file(out / "aoi.csv", rendering.aoi)
    gaze_dir = out / "gaze"
    gaze_dir.mkdir(exist_ok=True)
    participants = []
    for i in range(args.participants):
        pid = f"{args.cohort}{i + 1:02d}"
        seed = args.seed * 1000 + i
        if args.policy == "deterministic":
            policy = OraclePolicy(seed=seed)
        else:
            policy = cohort_policy(args.cohort, seed)
        gaze = oracle_gaze(rendering, policy)
        write_label_file(gaze_dir / f"{pid}.labels.csv", gaze)
        if args.samples:
            t, x, y = synthesize_samples(gaze, seed=seed, blink_rate=args.blink_rate, jitter_px=args.jitter)
            write_samples_file(gaze_dir / f"{pid}.samples.csv", t, x, y)
        participants.append(pid)
    meta = {"stimulus": script.stimulus, "cohort": args.cohort, "participants": participants,
            "n_frames": int(script.n_frames), "policy": args.policy}
    (out / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    _emit({"command": "generate", "out": str(out), **meta})
    return EXIT_OK


# ------------------------------------------------------------ preprocess

def _load_generated(path: Path):
    meta = json.loads((path / "meta.json").read_text())
    features, _ = read_feature_file(path / "features.csv")
    aoi = read_aoi_file(path / "aoi.csv")
    return meta, features, aoi


def cmd_preprocess(args) -> int:
    taxonomy = Taxonomy.parse(args.taxonomy)
    parts = []
    for src in args.inputs:
        src = Path(src)
        meta, features, aoi = _load_generated(src)
        for pid in meta["participants"]:
            tags = dict(participant=pid, cohort=meta["cohort"], stimulus=meta["stimulus"])
            samples = src / "gaze" / f"{pid}.samples.csv"
            if samples.exists() and not args.use_labels:
                _, x, y = read_samples_csv(samples)
                ds = dataset_from_samples(features, aoi, x, y, taxonomy=taxonomy, **tags)
            else:
                gaze = read_label_file(src / "gaze" / f"{pid}.labels.csv")
                labels = gaze.labels if taxonomy is Taxonomy.FINE13 else collapse_indices(gaze.labels)
                ds = build_dataset(features, labels, taxonomy=taxonomy, **tags)
            if args.step > 1:
                # participant-specific phase so stepped windows differ across participants
                phase = (len(parts) * args.phase_shift) % args.step
                ds = ds.subset(np.flatnonzero(ds.starts % args.step == phase))
            parts.append(ds)
    if not parts:
        raise ValidationError("inputs", "no recordings found")
    ds = WindowedDataset.concat(parts)
    if len(ds) == 0:
        log.warning("dataset is empty: no valid window/target pairs")
    out = Path(args.out)
    _write_config(out, args)
    ds.save(out / "dataset.npz")
    counts = np.bincount(ds.targets, minlength=taxonomy.size).tolist() if len(ds) else [0] * taxonomy.size
    _emit({"command": "preprocess", "examples": len(ds), "participants": sorted(set(ds.participants.tolist())),
           "label_counts": counts})
    return EXIT_OK


# ------------------------------------------------------------- training

def cmd_train(args) -> int:
    from .models import build_model, save_model, train
    ds = WindowedDataset.load(args.dataset)
    test_ids = [p for p in (args.test_participants or "").split(",") if p]
    if not test_ids:
        from .eval import make_folds
        plan = make_folds(ds.participants, args.folds, args.seed)
        test_ids = plan.fold_participants(args.fold)
    mask = np.isin(ds.participants, test_ids)
    config = _train_config(args)
    model = build_model(args.arch, ds.taxonomy, seed=args.seed)
    model, history = train(model, ds.subset(np.flatnonzero(~mask)), ds.subset(np.flatnonzero(mask)), config)
    out = Path(args.out)
    _write_config(out, args, test_participants_resolved=test_ids)
    save_model(out / "model.npz", model, config)
    (out / "history.json").write_text(json.dumps(history.to_dict(), indent=2) + "\n")
    _emit({"command": "train", "architecture": args.arch, "param_count": model.param_count(),
           "best_epoch": history.best_epoch, "best_test_accuracy": max(history.test_accuracy)})
    return EXIT_OK


def cmd_eval(args) -> int:
    from .eval import audit_leakage, run_cv, write_confusion_csv, write_plot_data, write_report_csv
    from .models import save_model
    ds = WindowedDataset.load(args.dataset)
    config = _train_config(args)
    report = run_cv(ds, args.arch, config, k=args.folds, jobs=args.jobs)
    leaks = audit_leakage(report)
    if leaks:
        raise ValidationError("folds", f"participants leak across folds: {leaks}")
    out = Path(args.out)
    _write_config(out, args)
    write_report_csv(out / "report.csv", report)
    write_plot_data(out / "plot_data.csv", report)
    write_confusion_csv(out / "confusion.csv", report, [lab.name for lab in ds.taxonomy.labels])
    (out / "models").mkdir(exist_ok=True)
    for r, m in zip(report.folds, report.models):
        save_model(out / "models" / f"fold{r.fold}.npz", m, replace(config, seed=config.seed + r.fold))
    summary = report.summary()
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    _emit({"command": "eval", **summary})
    return EXIT_OK


def _load_model_dir(path: Path) -> list:
    from .models import load_model
    files = sorted(path.glob("fold*.npz")) if path.is_dir() else [path]
    if not files:
        raise ValidationError("models", f"no fold*.npz models in {path}")
    return [load_model(f)[0] for f in files]


def _probe_windows(path: Path) -> np.ndarray:
    if path.suffix == ".npz":
        return WindowedDataset.load(path).X
    features, _ = read_feature_file(path)
    from .core import WINDOW
    if len(features) < WINDOW:
        raise ValidationError("probe", "probe stream is shorter than one window")
    idx = np.arange(len(features) - WINDOW + 1)[:, None] + np.arange(WINDOW)
    return features[idx]


def cmd_similarity(args) -> int:
    from .eval import model_similarity, write_similarity_csv
    models_a = _load_model_dir(Path(args.models_a))
    models_b = _load_model_dir(Path(args.models_b))
    result = model_similarity(models_a, models_b, _probe_windows(Path(args.probe)))
    out = Path(args.out)
    _write_config(out, args)
    write_similarity_csv(out / "similarity.csv", result)
    _emit({"command": "similarity", "pairs": result.n_pairs, "mean": result.mean, "sd": result.sd})
    return EXIT_OK


def cmd_stats(args) -> int:
    from . import stats
    out = Path(args.out)
    _write_config(out, args)
    if args.summary:
        rows = stats.summary_tests(stats.read_summary_csv(args.summary))
        stats.write_test_report(out / "test_report.csv", rows)
        _emit({"command": "stats", "tests": [{"feature": r["feature"], "condition": r["condition"],
                                              "t": r["t"], "df": r["df"], "p": r["p"]} for r in rows]})
        return EXIT_OK
    if not args.inputs:
        raise ValidationError("inputs", "give --summary or generated recording directories")
    taxonomy = Taxonomy.parse(args.taxonomy)
    records = []
    for src in args.inputs:
        src = Path(src)
        meta = json.loads((src / "meta.json").read_text())
        for pid in meta["participants"]:
            labels = read_label_file(src / "gaze" / f"{pid}.labels.csv").labels
            if taxonomy is Taxonomy.COARSE5:
                labels = collapse_indices(labels)
            records.append((pid, meta["cohort"], meta["stimulus"], labels))
    rows = stats.feature_table(records)
    stats.write_feature_table(out / "features.csv", rows)
    tests = stats.compare_groups(rows, "cohort", "child", "adult", "stimulus")
    tests += stats.compare_groups(rows, "stimulus", "animation", "live_action", "cohort")
    stats.write_test_report(out / "test_report.csv", tests)
    _emit({"command": "stats", "participants": len(rows), "tests": len(tests)})
    return EXIT_OK


def cmd_run(args) -> int:
    from .controller import open_source, run_stream, scenario_to_wire
    from .models import load_model
    model, _ = load_model(args.model)
    if args.replay:
        if Path(args.replay).is_dir():
            script_cfg = json.loads((Path(args.replay) / "scenario.json").read_text())
        else:
            script_cfg = {"canonical": args.replay}
        frames = render_frames(build_script(script_cfg)).frames
        source = scenario_to_wire(frames)
    else:
        source = open_source(args.input)
    if args.output != "-":
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    sink = sys.stdout if args.output == "-" else open(args.output, "w", encoding="utf-8", newline="\n")
    try:
        stats = run_stream(source, sink, model, taxonomy=args.taxonomy, cooldown_ms=args.cooldown_ms,
                           queue_size=args.queue_size)
    finally:
        if sink is not sys.stdout:
            sink.close()
    if args.output != "-":
        _write_config(Path(args.output).parent, args)
    if args.stats:
        Path(args.stats).parent.mkdir(parents=True, exist_ok=True)
        Path(args.stats).write_text(json.dumps(stats.to_dict(), sort_keys=True, indent=2) + "\n")
    if args.output != "-":
        _emit({"command": "run", **{k: v for k, v in stats.to_dict().items() if k != "errors"}})
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _add_train_flags(p):
    p.add_argument("--arch", choices=("lstm", "transformer"), default="lstm")
    p.add_argument("--max-epochs", type=int, default=100)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=20)
    p.add_argument("--lr", type=float, default=1e-3)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gazekit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gazekit {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--seed", type=int, default=0)
        p.set_defaults(func=func)
        return p

    p = add("generate", cmd_generate, "render a scenario, its AOIs and oracle gaze")
    p.add_argument("--out", required=True)
    p.add_argument("--stimulus", choices=STIMULI, default="animation")
    p.add_argument("--segments", type=int, help="keep the first N canonical segments")
    p.add_argument("--random-segments", type=int, help="randomised script with N segments")
    p.add_argument("--config", help="explicit script config (JSON)")
    p.add_argument("--policy", choices=("deterministic", "stochastic"), default="stochastic")
    p.add_argument("--cohort", choices=COHORTS, default="child")
    p.add_argument("--participants", type=int, default=1)
    p.add_argument("--samples", action="store_true", help="also write 1000 Hz raw sample files")
    p.add_argument("--blink-rate", type=float, default=0.0)
    p.add_argument("--jitter", type=float, default=0.0)

    p = add("preprocess", cmd_preprocess, "build a windowed dataset from generated recordings")
    p.add_argument("inputs", nargs="+", help="directories written by 'generate'")
    p.add_argument("--out", required=True)
    p.add_argument("--taxonomy", default="fine13")
    p.add_argument("--step", type=int, default=1, help="keep every N-th window position")
    p.add_argument("--phase-shift", type=int, default=1, help="per-participant phase of the step grid")
    p.add_argument("--use-labels", action="store_true", help="use oracle label files, not raw samples")

    p = add("train", cmd_train, "train one model on a participant split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--test-participants", help="comma-separated held-out participants")
    p.add_argument("--folds", type=int, default=6)
    p.add_argument("--fold", type=int, default=0, help="held-out fold when no participants are named")
    _add_train_flags(p)

    p = add("eval", cmd_eval, "participant-grouped K-fold cross-validation")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--folds", type=int, default=6)
    p.add_argument("--jobs", type=int, default=1)
    _add_train_flags(p)

    p = add("similarity", cmd_similarity, "argmax agreement between two model sets")
    p.add_argument("--models-a", required=True)
    p.add_argument("--models-b", required=True)
    p.add_argument("--probe", required=True, help="dataset .npz or feature file")
    p.add_argument("--out", required=True)

    p = add("stats", cmd_stats, "gaze features and t-tests")
    p.add_argument("inputs", nargs="*", help="directories written by 'generate'")
    p.add_argument("--summary", help="CSV of summary statistics to test")
    p.add_argument("--taxonomy", default="coarse5")
    p.add_argument("--out", required=True)

    p = add("run", cmd_run, "stream frames through a model and emit head-pose commands")
    p.add_argument("--model", required=True)
    p.add_argument("--input", default="-", help="'-', a file, or tcp://host:port")
    p.add_argument("--replay", help="canonical stimulus name or a 'generate' directory")
    p.add_argument("--output", default="-")
    p.add_argument("--stats", help="write session statistics JSON here")
    p.add_argument("--taxonomy")
    p.add_argument("--cooldown-ms", type=int, default=5000)
    p.add_argument("--queue-size", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError) as exc:  # unreadable or non-JSON files
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:  # includes ValidationError
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
