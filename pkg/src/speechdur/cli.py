"""``speechdur`` command line: synth, featurize, train, cv, predict, estimate, eval-meeting.

Every command accepts ``--config FILE``; values from flags beat the file,
which beats built-in defaults. Commands that write files also write
``<output>.config.toml`` (``config.toml`` inside a directory output) holding
the effective configuration, so ``speechdur <command> --config <echo>``
replays the run.
"""
from __future__ import annotations

import argparse
import csv
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import config as cfglib
from .classify import LabeledDataset, ModelKind, load_model, predict, save_model, train
from .duration import (
    annotation_total,
    estimate_duration,
    label_windows,
    read_annotations,
    write_annotations,
)
from .errors import ConfigError, IoError, ModelRecordingLayoutMismatch, SpeechDurError, StageError
from .evaluation import FeatureSet, confusion, cross_validate, format_table, write_cv_csv
from .features import FeatureMatrix, build_matrix, channels_from_layout, write_matrix_csv
from .pipeline import LabeledRecording, build_dataset, channels_for
from .signal import (
    Channel,
    PipelineConfig,
    discard_warmup,
    order_channels,
    read_recording_csv,
    regularize,
    segment,
    smooth,
    write_recording_csv,
)
from .synth import gen_corpus

MANIFEST = "manifest.csv"
MANIFEST_HEADER = ("name", "subject", "condition", "recording", "annotations")


@contextmanager
def stage(name: str, path=None):
    try:
        yield
    except StageError:
        raise
    except (SpeechDurError, ValueError, OSError) as exc:
        raise StageError(name, path, exc) from exc


def _write(path: Path, writer, *args) -> None:
    try:
        writer(path, *args)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from None


def _write_bytes(path: Path, blob: bytes) -> None:
    try:
        path.write_bytes(blob)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from None


def _write_text(path: Path, text: str) -> None:
    _write_bytes(path, text.encode("utf-8"))


def _echo_path(output: Path) -> Path:
    return output.with_name(output.name + ".config.toml")


def _require(cfg, key: str) -> Path:
    value = cfg["paths"].get(key)
    if not value:
        raise ConfigError(f"missing required path '{key}' (flag or [paths].{key})")
    return Path(value)


# --------------------------------------------------------------- ingestion

def load_windows(path: Path, pcfg: PipelineConfig, channels: Sequence[Channel] | None = None):
    """Read a recording CSV and return its windows restricted to ``channels``."""
    with stage("ingest", path):
        records = read_recording_csv(path)
    with stage("signal", path):
        series = regularize(records, pcfg)
        if channels is not None:
            missing = [c for c in channels if c not in series]
            if missing:
                raise ModelRecordingLayoutMismatch(
                    f"recording lacks channels {[c.value for c in missing]} required by the feature layout"
                )
            series = {c: series[c] for c in order_channels(channels)}
        cleaned = {c: discard_warmup(smooth(s, pcfg), pcfg) for c, s in series.items()}
        windows = segment(cleaned, pcfg)
    return windows


def read_manifest(data_dir: Path) -> list[dict[str, str]]:
    path = data_dir / MANIFEST
    with stage("ingest", path):
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
        if not rows:
            raise ValueError("manifest lists no recordings")
    return rows


def load_dataset(cfg, feature_set: FeatureSet) -> LabeledDataset:
    data_dir = _require(cfg, "data")
    pcfg = cfglib.pipeline_config(cfg)
    threshold = float(cfg["duration"]["threshold_s"])
    parts = []
    for row in read_manifest(data_dir):
        rec_path = data_dir / row["recording"]
        ann_path = data_dir / row["annotations"]
        with stage("ingest", rec_path):
            records = read_recording_csv(rec_path)
        with stage("ingest", ann_path):
            truth = read_annotations(ann_path)
        with stage("features", rec_path):
            parts.append(build_dataset([LabeledRecording(records, truth, row["subject"])],
                                       pcfg, feature_set, threshold))
    return LabeledDataset(
        FeatureMatrix.concat([p.matrix for p in parts]),
        np.concatenate([p.labels for p in parts]),
        tuple(g for p in parts for g in p.groups),
    )


# --------------------------------------------------------------- commands

def cmd_synth(cfg) -> int:
    out = _require(cfg, "output")
    corpus = gen_corpus(int(cfg["synth"]["subjects"]), seed=int(cfg["seed"]),
                        duration_s=float(cfg["synth"]["duration_s"]))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out}: {exc.strerror or exc}") from None
    rows = []
    for rec in corpus:
        rec_name = f"{rec.name}.csv"
        ann_name = f"{rec.name}.annotations.csv"
        _write(out / rec_name, write_recording_csv, rec.records)
        _write(out / ann_name, write_annotations, rec.truth)
        rows.append((rec.name, rec.subject, rec.condition, rec_name, ann_name))

    def write_manifest(path, rows):
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(MANIFEST_HEADER)
            w.writerows(rows)

    _write(out / MANIFEST, write_manifest, rows)
    _write(out / "config.toml", cfglib.echo, cfg)
    print(",".join(MANIFEST_HEADER))
    for r in rows:
        print(",".join(r))
    print(f"wrote {len(rows)} recordings to {out}")
    return 0


def cmd_featurize(cfg) -> int:
    rec_path = _require(cfg, "recording")
    out = _require(cfg, "output")
    pcfg = cfglib.pipeline_config(cfg)
    channels = channels_for(cfg["features"])
    windows = load_windows(rec_path, pcfg, channels)
    with stage("features", rec_path):
        matrix = build_matrix(windows, pcfg.target_rate, channels)
    labels = None
    ann = cfg["paths"].get("annotations")
    if ann:
        with stage("ingest", ann):
            labels = label_windows(windows, read_annotations(ann), cfg["duration"]["threshold_s"])
    _write(out, write_matrix_csv, matrix, labels)
    _write(_echo_path(out), cfglib.echo, cfg)
    print(f"{len(matrix)} windows x {len(matrix.columns)} features -> {out}")
    return 0


def cmd_train(cfg) -> int:
    out = _require(cfg, "output")
    fs = FeatureSet(cfg["features"])
    kind = ModelKind(cfg["model"])
    data = load_dataset(cfg, fs)
    with stage("classify", cfg["paths"]["data"]):
        model = train(data, kind, cfglib.hyperparams(cfg, kind), int(cfg["seed"]))
    _write_bytes(out, save_model(model))
    _write(_echo_path(out), cfglib.echo, cfg)
    print(f"trained {kind.value} on {len(data)} windows x {len(data.matrix.columns)} features -> {out}")
    return 0


def _expand(value: str, enum_cls) -> list:
    return list(enum_cls) if value == "all" else [enum_cls(value)]


def cmd_cv(cfg) -> int:
    kinds = _expand(cfg["model"], ModelKind)
    sets = _expand(cfg["features"], FeatureSet)
    cv = cfg["cv"]
    reports = []
    for fs in sets:
        data = load_dataset(cfg, fs)
        for kind in kinds:
            with stage("eval", cfg["paths"]["data"]):
                reports.append(cross_validate(
                    data, kind, cfglib.hyperparams(cfg, kind), int(cfg["seed"]),
                    int(cv["n_splits"]), float(cv["holdout"]), feature_set=fs,
                    kfold=bool(cv["kfold"]), by_subject=bool(cv["by_subject"]),
                ))
    table = format_table(reports)
    lines = [table, ""]
    for r in reports:
        pooled = r.pooled
        lines.append(
            f"{r.model_kind.value} {r.feature_set.value}: mean accuracy {r.mean_accuracy:.4f} "
            f"precision {pooled.precision:.4f} recall {pooled.recall:.4f} f1 {pooled.f1:.4f}"
        )
    summary = "\n".join(lines) + "\n"
    print(summary, end="")
    out = cfg["paths"].get("output")
    if out:
        out = Path(out)
        _write(out, write_cv_csv, reports)
        _write_text(out.with_name(out.name + ".summary.txt"), summary)
        _write(_echo_path(out), cfglib.echo, cfg)
    return 0


def _load_model_file(cfg):
    path = _require(cfg, "model_file")
    with stage("load-model", path):
        return load_model(path.read_bytes())


def _predict_recording(cfg):
    model = _load_model_file(cfg)
    rec_path = _require(cfg, "recording")
    pcfg = cfglib.pipeline_config(cfg)
    channels = channels_from_layout(model.feature_layout)
    windows = load_windows(rec_path, pcfg, channels)
    with stage("features", rec_path):
        matrix = build_matrix(windows, pcfg.target_rate, channels)
    with stage("classify", rec_path):
        if matrix.columns != model.feature_layout:
            raise ModelRecordingLayoutMismatch(
                f"recording yields {len(matrix.columns)} columns, model expects {len(model.feature_layout)}"
            )
        labels = predict(model, matrix)
    return windows, labels


def cmd_predict(cfg) -> int:
    windows, labels = _predict_recording(cfg)
    out = cfg["paths"].get("output")

    def write_trace(path, windows, labels):
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["start_time", "end_time", "label"])
            for win, lab in zip(windows, labels):
                w.writerow([repr(win.start_time), repr(win.end_time), int(lab)])

    if out:
        _write(Path(out), write_trace, windows, labels)
        _write(_echo_path(Path(out)), cfglib.echo, cfg)
    else:
        for win, lab in zip(windows, labels):
            print(f"{win.start_time:g}\t{int(lab)}")
    print(f"{int(np.sum(labels))} of {len(labels)} windows predicted Speech")
    return 0


def _duration_text(est, n_windows: int) -> str:
    return (
        f"windows {n_windows}\n"
        f"speech windows {est.speech_window_count}\n"
        f"estimated {est.estimated_seconds:.1f} s\n"
    )


def cmd_estimate(cfg) -> int:
    windows, labels = _predict_recording(cfg)
    est = estimate_duration(labels, float(cfg["duration"]["window_credit_s"]))
    text = _duration_text(est, len(windows))
    print(text, end="")
    out = cfg["paths"].get("output")
    if out:
        _write_text(Path(out), text)
        _write(_echo_path(Path(out)), cfglib.echo, cfg)
    return 0


def cmd_eval_meeting(cfg) -> int:
    windows, labels = _predict_recording(cfg)
    ann = _require(cfg, "annotations")
    with stage("ingest", ann):
        truth = read_annotations(ann)
    threshold = float(cfg["duration"]["threshold_s"])
    truth_labels = label_windows(windows, truth, threshold)
    est = estimate_duration(labels, float(cfg["duration"]["window_credit_s"]))
    with stage("eval", ann):
        cm = confusion(labels, truth_labels)
    text = (
        _duration_text(est, len(windows))
        + f"actual {annotation_total(truth):.1f} s\n"
        + f"accuracy {cm.accuracy:.4f}\n"
        + cm.format() + "\n"
    )
    print(text, end="")
    out = cfg["paths"].get("output")
    if out:
        out = Path(out)

        def write_trace(path):
            with open(path, "w", newline="", encoding="utf-8") as f:
                w = csv.writer(f, lineterminator="\n")
                w.writerow(["start_time", "end_time", "speech_overlap_s", "truth", "predicted"])
                for win, p, t in zip(windows, labels, truth_labels):
                    w.writerow([repr(win.start_time), repr(win.end_time),
                                repr(truth.overlap(win.start_time, win.end_time)), t, int(p)])

        _write(out, write_trace)
        _write_text(out.with_name(out.name + ".summary.txt"), text)
        _write(_echo_path(out), cfglib.echo, cfg)
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "featurize": cmd_featurize,
    "train": cmd_train,
    "cv": cmd_cv,
    "predict": cmd_predict,
    "estimate": cmd_estimate,
    "eval-meeting": cmd_eval_meeting,
}


# --------------------------------------------------------------- parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="speechdur", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file (e.g. an echoed *.config.toml)")
    common.add_argument("--seed", type=int)
    common.add_argument("-o", "--output", help="output file (directory for synth)")

    def features(p, allow_all=False):
        choices = ["pressure", "accel", "both"] + (["all"] if allow_all else [])
        p.add_argument("--features", choices=choices)

    def model_kind(p, allow_all=False):
        choices = ["rf", "svm", "knn"] + (["all"] if allow_all else [])
        p.add_argument("--model", choices=choices)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic two-condition corpus")
    p.add_argument("--subjects", type=int)
    p.add_argument("--duration", type=float, help="seconds per recording")

    p = sub.add_parser("featurize", parents=[common], help="feature matrix CSV for one recording")
    p.add_argument("recording", nargs="?")
    p.add_argument("--annotations")
    features(p)

    p = sub.add_parser("train", parents=[common], help="train a model on a corpus directory")
    p.add_argument("--data")
    features(p)
    model_kind(p)

    p = sub.add_parser("cv", parents=[common], help="repeated 90/10 cross-validation")
    p.add_argument("--data")
    features(p, allow_all=True)
    model_kind(p, allow_all=True)
    p.add_argument("--splits", type=int)
    p.add_argument("--holdout", type=float)
    p.add_argument("--kfold", action="store_true", default=None, help="stratified k-fold instead of shuffle-split")
    p.add_argument("--by-subject", action="store_true", default=None, help="hold out whole subjects")

    for name, help_text in (
        ("predict", "per-window labels for a recording"),
        ("estimate", "estimated speech duration of a recording"),
        ("eval-meeting", "estimate plus confusion matrix against annotations"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("recording", nargs="?")
        p.add_argument("-m", "--model-file")
        if name == "eval-meeting":
            p.add_argument("--annotations")
    return parser


def flag_overrides(args: argparse.Namespace) -> dict[str, Any]:
    over: dict[str, Any] = {}
    paths: dict[str, Any] = {}
    cv: dict[str, Any] = {}
    synth: dict[str, Any] = {}
    simple = {"seed": "seed", "features": "features", "model": "model"}
    for attr, key in simple.items():
        if getattr(args, attr, None) is not None:
            over[key] = getattr(args, attr)
    for attr in ("output", "recording", "annotations", "data", "model_file"):
        if getattr(args, attr, None) is not None:
            paths[attr] = str(getattr(args, attr))
    for attr, key in (("splits", "n_splits"), ("holdout", "holdout"), ("kfold", "kfold"), ("by_subject", "by_subject")):
        if getattr(args, attr, None) is not None:
            cv[key] = getattr(args, attr)
    for attr, key in (("subjects", "subjects"), ("duration", "duration_s")):
        if getattr(args, attr, None) is not None:
            synth[key] = getattr(args, attr)
    if paths:
        over["paths"] = paths
    if cv:
        over["cv"] = cv
    if synth:
        over["synth"] = synth
    return over


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_values = cfglib.load_file(args.config) if args.config else {}
        echoed = file_values.get("command")
        if echoed is not None and echoed != args.command:
            raise ConfigError(f"config was echoed by '{echoed}', not '{args.command}'")
        cfg = cfglib.resolve(file_values, flag_overrides(args))
        cfg["command"] = args.command
        return COMMANDS[args.command](cfg)
    except (SpeechDurError, ValueError) as exc:
        print(f"speechdur {args.command}: error {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
