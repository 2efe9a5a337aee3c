"""Repeated hold-out cross-validation and confusion matrices (Speech is the positive class)."""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .classify import LabeledDataset, ModelKind, predict, train
from .errors import DatasetTooSmall, EmptyInput, LengthMismatch, SingleClassDataset
from .seeding import derive_rng, derive_seed


class FeatureSet(str, enum.Enum):
    PRESSURE = "pressure"
    ACCEL = "accel"
    BOTH = "both"

    @property
    def label(self) -> str:
        return {"pressure": "PressureOnly", "accel": "AccelOnly", "both": "Combined"}[self.value]


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 0.0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)

    def format(self) -> str:
        return (
            "                 pred Speech  pred NoSpeech\n"
            f"true Speech      {self.tp:>11d}  {self.fn:>13d}\n"
            f"true NoSpeech    {self.fp:>11d}  {self.tn:>13d}"
        )


def confusion(pred: Sequence[int], truth: Sequence[int]) -> ConfusionMatrix:
    pred = np.asarray(pred, dtype=int).reshape(-1)
    truth = np.asarray(truth, dtype=int).reshape(-1)
    if pred.size != truth.size:
        raise LengthMismatch(f"{pred.size} predictions vs {truth.size} labels")
    if pred.size == 0:
        raise EmptyInput("confusion matrix of zero windows")
    return ConfusionMatrix(
        tp=int(np.sum((pred == 1) & (truth == 1))),
        fp=int(np.sum((pred == 1) & (truth == 0))),
        tn=int(np.sum((pred == 0) & (truth == 0))),
        fn=int(np.sum((pred == 0) & (truth == 1))),
    )


@dataclass(frozen=True)
class CvReport:
    per_split_accuracy: tuple[float, ...]
    model_kind: ModelKind
    feature_set: FeatureSet | None
    per_split_confusion: tuple[ConfusionMatrix, ...] = field(default=(), repr=False)

    @property
    def n_splits(self) -> int:
        return len(self.per_split_accuracy)

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.per_split_accuracy))

    @property
    def pooled(self) -> ConfusionMatrix:
        out = ConfusionMatrix()
        for cm in self.per_split_confusion:
            out = out + cm
        return out


# ------------------------------------------------------------------ splitting

def _holdout_counts(class_sizes: Sequence[int], n_test: int) -> list[int]:
    """Largest-remainder allocation of ``n_test`` rows across classes."""
    total = sum(class_sizes)
    exact = [n_test * c / total for c in class_sizes]
    counts = [int(np.floor(x)) for x in exact]
    order = sorted(range(len(class_sizes)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[: n_test - sum(counts)]:
        counts[i] += 1
    return counts


def stratified_shuffle_splits(labels: np.ndarray, n_splits: int, holdout: float, seed: int):
    labels = np.asarray(labels, dtype=int)
    classes = [np.nonzero(labels == c)[0] for c in (0, 1)]
    sizes = [c.size for c in classes]
    if min(sizes) == 0:
        raise SingleClassDataset("cross-validation needs both classes")
    n_test = int(round(holdout * labels.size))
    counts = _holdout_counts(sizes, n_test)
    if min(counts) < 1 or any(s - c < 2 for s, c in zip(sizes, counts)):
        raise DatasetTooSmall(
            f"{labels.size} rows ({sizes[1]} Speech) cannot give every {holdout:.0%} holdout both classes"
        )
    for i in range(n_splits):
        rng = derive_rng(seed, "cv-split", i)
        test = np.concatenate([rng.permutation(idx)[:k] for idx, k in zip(classes, counts)])
        mask = np.zeros(labels.size, dtype=bool)
        mask[test] = True
        yield np.nonzero(~mask)[0], np.nonzero(mask)[0]


def stratified_kfold_splits(labels: np.ndarray, n_splits: int, seed: int):
    labels = np.asarray(labels, dtype=int)
    rng = derive_rng(seed, "cv-kfold")
    fold_of = np.empty(labels.size, dtype=int)
    for c in (0, 1):
        idx = rng.permutation(np.nonzero(labels == c)[0])
        if idx.size < n_splits:
            raise DatasetTooSmall(f"class {c} has {idx.size} rows, fewer than {n_splits} folds")
        fold_of[idx] = np.arange(idx.size) % n_splits
    for k in range(n_splits):
        yield np.nonzero(fold_of != k)[0], np.nonzero(fold_of == k)[0]


def group_shuffle_splits(groups: Sequence[str], n_splits: int, holdout: float, seed: int):
    """Hold out whole subjects: ``round(holdout * n_groups)`` (at least one) per split."""
    names = sorted(set(groups))
    if len(names) < 2:
        raise DatasetTooSmall("subject-disjoint evaluation needs at least 2 subjects")
    n_out = min(max(1, int(round(holdout * len(names)))), len(names) - 1)
    groups = np.asarray(groups)
    for i in range(n_splits):
        rng = derive_rng(seed, "cv-groups", i)
        held = set(rng.permutation(names)[:n_out].tolist())
        mask = np.array([g in held for g in groups])
        yield np.nonzero(~mask)[0], np.nonzero(mask)[0]


def cross_validate(data: LabeledDataset, kind: ModelKind | str, hyperparams: Mapping[str, Any] | None = None,
                   seed: int = 0, n_splits: int = 10, holdout: float = 0.10, *,
                   feature_set: FeatureSet | str | None = None, kfold: bool = False,
                   by_subject: bool = False) -> CvReport:
    """Retrain on each split's training part and score its held-out part.

    The default is ``n_splits`` independent stratified 90/10 shuffle-splits.
    ``kfold`` switches to stratified k-fold; ``by_subject`` holds out whole
    subjects (requires ``data.groups``).
    """
    kind = ModelKind(kind)
    if feature_set is not None:
        feature_set = FeatureSet(feature_set)
    if int(data.labels.sum()) in (0, len(data)):
        raise SingleClassDataset("cross-validation needs both classes")
    if by_subject:
        if data.groups is None:
            raise DatasetTooSmall("by_subject evaluation needs per-row subject groups")
        splits = group_shuffle_splits(data.groups, n_splits, holdout, seed)
    elif kfold:
        splits = stratified_kfold_splits(data.labels, n_splits, seed)
    else:
        splits = stratified_shuffle_splits(data.labels, n_splits, holdout, seed)

    accuracies, matrices = [], []
    for i, (train_idx, test_idx) in enumerate(splits):
        model = train(data.take(train_idx), kind, hyperparams, derive_seed(seed, "cv-train", i))
        held = data.take(test_idx)
        cm = confusion(predict(model, held.matrix), held.labels)
        accuracies.append(cm.accuracy)
        matrices.append(cm)
    return CvReport(tuple(accuracies), kind, feature_set, tuple(matrices))


# ------------------------------------------------------------------ reports

def write_cv_csv(path: str | Path, reports: Sequence[CvReport]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["model", "feature_set", "split", "accuracy", "precision", "recall", "f1",
                    "tp", "fp", "tn", "fn"])
        for r in reports:
            fs = r.feature_set.value if r.feature_set else ""
            for i, (acc, cm) in enumerate(zip(r.per_split_accuracy, r.per_split_confusion)):
                w.writerow([r.model_kind.value, fs, i, repr(acc), repr(cm.precision), repr(cm.recall),
                            repr(cm.f1), cm.tp, cm.fp, cm.tn, cm.fn])


def format_table(reports: Sequence[CvReport]) -> str:
    """Mean accuracies laid out with model kinds as rows and feature sets as columns."""
    kinds = [k for k in ModelKind if any(r.model_kind is k for r in reports)]
    sets = [s for s in FeatureSet if any(r.feature_set is s for r in reports)]
    cell = {(r.model_kind, r.feature_set): r for r in reports}
    width = 14
    lines = ["model".ljust(6) + "".join(s.label.rjust(width) for s in sets)]
    for k in kinds:
        row = k.value.upper().ljust(6)
        for s in sets:
            r = cell.get((k, s))
            row += (f"{100 * r.mean_accuracy:.1f} %" if r else "-").rjust(width)
        lines.append(row)
    n = {r.n_splits for r in reports}
    lines.append(f"(mean accuracy over {'/'.join(str(v) for v in sorted(n))} splits)")
    return "\n".join(lines)
