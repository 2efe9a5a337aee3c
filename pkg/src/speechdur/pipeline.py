"""Recording -> windows -> labeled feature rows, shared by the library and the CLI."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .classify import LabeledDataset
from .duration import AnnotationTrack, label_windows
from .evaluation import FeatureSet
from .features import FeatureMatrix, build_matrix
from .signal import ACCEL_CHANNELS, Channel, PipelineConfig, SensorRecord, WindowSegment, prepare

FEATURE_SET_CHANNELS = {
    FeatureSet.PRESSURE: (Channel.PRESSURE,),
    FeatureSet.ACCEL: ACCEL_CHANNELS,
    FeatureSet.BOTH: (Channel.PRESSURE, *ACCEL_CHANNELS),
}


def channels_for(feature_set: FeatureSet | str) -> tuple[Channel, ...]:
    return FEATURE_SET_CHANNELS[FeatureSet(feature_set)]


def recording_windows(records: Sequence[SensorRecord], cfg: PipelineConfig,
                      channels: Sequence[Channel]) -> list[WindowSegment]:
    return [w.select(channels) for w in prepare(records, cfg)]


def recording_matrix(records: Sequence[SensorRecord], cfg: PipelineConfig,
                     channels: Sequence[Channel]) -> tuple[FeatureMatrix, list[WindowSegment]]:
    windows = recording_windows(records, cfg, channels)
    return build_matrix(windows, cfg.target_rate, channels), windows


@dataclass(frozen=True)
class LabeledRecording:
    records: Sequence[SensorRecord]
    truth: AnnotationTrack
    subject: str = ""


def build_dataset(recordings: Sequence[LabeledRecording], cfg: PipelineConfig,
                  feature_set: FeatureSet | str, threshold_s: float = 3.0) -> LabeledDataset:
    channels = channels_for(feature_set)
    parts, labels, groups = [], [], []
    for rec in recordings:
        matrix, windows = recording_matrix(rec.records, cfg, channels)
        parts.append(matrix)
        labels.extend(label_windows(windows, rec.truth, threshold_s))
        groups.extend([rec.subject] * len(matrix))
    return LabeledDataset(FeatureMatrix.concat(parts), np.array(labels, dtype=int), tuple(groups))
