"""Window labels from annotated speech intervals, and durations from window labels.

Annotation CSV format: header ``start_s,end_s``, one half-open interval
``[start_s, end_s)`` per row, sorted and non-overlapping. Back-channel
utterances ("yes", "I see") are not annotated as speech; hesitations shorter
than 3 s inside an utterance are kept within its interval.

A window counts as Speech when its annotated overlap is strictly more than
``threshold_s`` (default 3 s of a 6 s window). Each Speech window contributes
``window_credit_s`` (default 4.5 s, the hop length) to the estimate, so runs of
consecutive Speech windows add up without double counting the overlaps.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigError, UnsortedAnnotations
from .signal import WindowSegment

WINDOW_CREDIT_S = 4.5
SPEECH_THRESHOLD_S = 3.0


@dataclass(frozen=True)
class AnnotationTrack:
    intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        ivs = tuple((float(s), float(e)) for s, e in self.intervals)
        prev_end = -math.inf
        for s, e in ivs:
            if not e > s:
                raise UnsortedAnnotations(f"interval [{s}, {e}) has non-positive length")
            if s < prev_end:
                raise UnsortedAnnotations(f"interval starting at {s} overlaps or precedes the previous one")
            prev_end = e
        object.__setattr__(self, "intervals", ivs)

    def __len__(self) -> int:
        return len(self.intervals)

    def overlap(self, start: float, end: float) -> float:
        """Seconds of annotated speech inside ``[start, end)``."""
        total = 0.0
        for s, e in self.intervals:
            if s >= end:
                break
            lo, hi = max(s, start), min(e, end)
            if hi > lo:
                total += hi - lo
        return total


@dataclass(frozen=True)
class DurationEstimate:
    speech_window_count: int
    estimated_seconds: float
    window_credit_s: float = WINDOW_CREDIT_S


def estimate_duration(predictions: Iterable[int], window_credit_s: float = WINDOW_CREDIT_S) -> DurationEstimate:
    if not window_credit_s > 0:
        raise ConfigError("window_credit_s must be positive")
    count = sum(1 for p in predictions if int(p) == 1)
    return DurationEstimate(count, count * window_credit_s, window_credit_s)


def windows_from_seconds(seconds: float, window_credit_s: float = WINDOW_CREDIT_S) -> int:
    """Invert ``estimate_duration``: the Speech window count behind a reported duration."""
    ratio = seconds / window_credit_s
    count = round(ratio)
    if abs(ratio - count) > 1e-9:
        raise ValueError(f"{seconds} s is not a whole multiple of {window_credit_s} s")
    return int(count)


def label_windows(windows: Sequence[WindowSegment], truth: AnnotationTrack,
                  threshold_s: float = SPEECH_THRESHOLD_S) -> list[int]:
    if not isinstance(truth, AnnotationTrack):
        truth = AnnotationTrack(tuple(truth))
    labels = []
    for w in windows:
        if not 0 < threshold_s <= w.duration:
            raise ConfigError(f"threshold_s must lie in (0, {w.duration}], got {threshold_s}")
        labels.append(int(truth.overlap(w.start_time, w.end_time) > threshold_s))
    return labels


def annotation_total(truth: AnnotationTrack) -> float:
    return float(sum(e - s for s, e in truth.intervals))


def read_annotations(path: str | Path) -> AnnotationTrack:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["start_s", "end_s"]:
            raise ValueError(f"{path}: expected header start_s,end_s, got {header}")
        intervals = [(float(r[0]), float(r[1])) for r in reader if r]
    return AnnotationTrack(tuple(intervals))


def write_annotations(path: str | Path, truth: AnnotationTrack) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["start_s", "end_s"])
        for s, e in truth.intervals:
            w.writerow([repr(s), repr(e)])
