"""Per-window features: 6 time-domain and 8 frequency-domain values per channel.

Column layout per channel, in order::

    max, min, mean, std, skewness, kurtosis,
    f_max, f_min, f_mean, f_std, f_skewness, f_kurtosis,
    peak_frequency, average_frequency

Channel blocks follow ``CHANNEL_ORDER`` (pressure, then accel x/y/z), so a
pressure-only window has 14 columns, acceleration-only 42 and both 56.
Columns are named ``<channel>_<feature>``, e.g. ``accel_y_f_std``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import EmptySpectrum, InconsistentChannelSets, TooFewSamples
from .fft import rfft_magnitude
from .signal import Channel, WindowSegment, order_channels

TIME_FEATURES = ("max", "min", "mean", "std", "skewness", "kurtosis")
FREQ_FEATURES = tuple(f"f_{n}" for n in TIME_FEATURES) + ("peak_frequency", "average_frequency")
CHANNEL_FEATURES = TIME_FEATURES + FREQ_FEATURES

BREATHING_BAND = (0.13, 0.66)
# inclusive band edges tolerate bin-frequency rounding
_BAND_TOL = 1e-9
SPECTRAL_FLOOR = 1e-13


def feature_layout(channels: Sequence[Channel]) -> tuple[str, ...]:
    return tuple(f"{c.value}_{name}" for c in order_channels(channels) for name in CHANNEL_FEATURES)


def channels_from_layout(layout: Sequence[str]) -> tuple[Channel, ...]:
    """Recover the channel set a layout was built from."""
    found = []
    for c in Channel:
        if f"{c.value}_{CHANNEL_FEATURES[0]}" in layout:
            found.append(c)
    return order_channels(found)


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    layout: tuple[str, ...]


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray  # shape (n_windows, n_columns)
    columns: tuple[str, ...]
    start_times: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def __len__(self) -> int:
        return self.values.shape[0]

    def row(self, i: int) -> FeatureVector:
        return FeatureVector(self.values[i], self.columns)

    def take(self, rows) -> "FeatureMatrix":
        rows = np.asarray(rows, dtype=int)
        return FeatureMatrix(self.values[rows], self.columns, self.start_times[rows])

    @staticmethod
    def concat(parts: Sequence["FeatureMatrix"]) -> "FeatureMatrix":
        if not parts:
            raise InconsistentChannelSets("nothing to concatenate")
        cols = parts[0].columns
        for p in parts:
            if p.columns != cols:
                raise InconsistentChannelSets("feature matrices have different layouts")
        return FeatureMatrix(
            np.vstack([p.values for p in parts]).reshape(-1, len(cols)),
            cols,
            np.concatenate([p.start_times for p in parts]),
        )


@dataclass(frozen=True)
class MagnitudeSpectrum:
    bin_frequencies: np.ndarray
    magnitudes: np.ndarray
    resolution: float


def _moments(x: np.ndarray) -> tuple[float, float, float, float]:
    """Mean, sample std (n-1), biased skewness g1 and excess kurtosis g2."""
    mean = float(np.mean(x))
    std = float(np.std(x, ddof=1))
    scale = float(np.max(np.abs(x)))
    # spread below rounding noise counts as constant; relative test keeps scale invariance
    if scale == 0.0 or float(np.ptp(x)) <= 1e-12 * scale:
        return mean, std, 0.0, 0.0
    # shape statistics are scale-free, so work on x / max|x| to avoid under/overflow
    d = x / scale - mean / scale
    m2 = float(np.mean(d * d))
    m3 = float(np.mean(d ** 3))
    m4 = float(np.mean(d ** 4))
    return mean, std, m3 / m2 ** 1.5, m4 / m2 ** 2 - 3.0


def time_stats(samples) -> np.ndarray:
    """(max, min, mean, std, skewness, kurtosis) of a sample sequence."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise TooFewSamples(f"time statistics need at least 2 samples, got {x.size}")
    mean, std, skew, kurt = _moments(x)
    return np.array([x.max(), x.min(), mean, std, skew, kurt])


def spectrum(samples, rate: float) -> MagnitudeSpectrum:
    """One-sided DFT magnitudes at the native length (no zero padding)."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 8:
        raise TooFewSamples(f"spectrum needs at least 8 samples, got {n}")
    mags = rfft_magnitude(x)
    # rounding residue of an exactly-zero bin, relative so scaling the input scales the floor
    mags[mags <= SPECTRAL_FLOOR * float(np.sum(np.abs(x)))] = 0.0
    freqs = np.arange(mags.size) * (rate / n)
    return MagnitudeSpectrum(freqs, mags, rate / n)


def peak_frequency(spec: MagnitudeSpectrum, band: tuple[float, float] = BREATHING_BAND) -> float:
    """Strongest in-band bin that is a strict local maximum of the whole spectrum, else 0."""
    mags = spec.magnitudes
    freqs = spec.bin_frequencies
    best_k, best_mag = None, -np.inf
    for k in range(1, mags.size):
        f = freqs[k]
        if f < band[0] - _BAND_TOL or f > band[1] + _BAND_TOL:
            continue
        if mags[k] <= mags[k - 1]:
            continue
        if k + 1 < mags.size and mags[k] <= mags[k + 1]:
            continue
        if mags[k] > best_mag:
            best_k, best_mag = k, mags[k]
    return 0.0 if best_k is None else float(freqs[best_k])


def freq_stats(spec: MagnitudeSpectrum) -> np.ndarray:
    """Eight frequency-domain features; statistics skip the DC bin."""
    mags = spec.magnitudes[1:]
    freqs = spec.bin_frequencies[1:]
    if mags.size < 2:
        raise EmptySpectrum(f"need at least 2 non-DC bins, got {mags.size}")
    total = float(mags.sum())
    centroid = float(np.dot(freqs, mags) / total) if total > 0 else 0.0
    return np.concatenate([time_stats(mags), [peak_frequency(spec), centroid]])


def channel_features(samples, rate: float) -> np.ndarray:
    return np.concatenate([time_stats(samples), freq_stats(spectrum(samples, rate))])


def featurize_window(w: WindowSegment, rate: float) -> FeatureVector:
    channels = w.channel_set
    if not channels:
        raise InconsistentChannelSets("window has no channels")
    values = np.concatenate([channel_features(w.channels[c], rate) for c in channels])
    return FeatureVector(values, feature_layout(channels))


def build_matrix(windows: Sequence[WindowSegment], rate: float,
                 channels: Sequence[Channel] | None = None) -> FeatureMatrix:
    """Stack ``featurize_window`` rows.

    ``channels`` fixes the layout when ``windows`` may be empty; otherwise it is
    taken from the first window.
    """
    if channels is None:
        if not windows:
            raise InconsistentChannelSets("cannot infer a layout from zero windows; pass channels")
        channels = windows[0].channel_set
    channels = order_channels(channels)
    layout = feature_layout(channels)
    rows = []
    for i, w in enumerate(windows):
        if w.channel_set != channels:
            raise InconsistentChannelSets(
                f"window {i} has channels {[c.value for c in w.channel_set]}, "
                f"expected {[c.value for c in channels]}"
            )
        rows.append(featurize_window(w, rate).values)
    values = np.array(rows, dtype=float).reshape(len(rows), len(layout))
    starts = np.array([w.start_time for w in windows], dtype=float)
    return FeatureMatrix(values, layout, starts)


def write_matrix_csv(path: str | Path, matrix: FeatureMatrix, labels=None) -> None:
    """Header ``start_time,<columns...>[,label]``; one window per row."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        header = ["start_time", *matrix.columns]
        if labels is not None:
            header.append("label")
        w.writerow(header)
        for i in range(len(matrix)):
            row = [repr(float(matrix.start_times[i]))] + [repr(float(v)) for v in matrix.values[i]]
            if labels is not None:
                row.append(str(int(labels[i])))
            w.writerow(row)


def read_matrix_csv(path: str | Path) -> tuple[FeatureMatrix, np.ndarray | None]:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0][0] != "start_time":
        raise ValueError(f"{path}: missing start_time header")
    header = rows[0]
    has_label = header[-1] == "label"
    columns = tuple(header[1:-1] if has_label else header[1:])
    body = [r for r in rows[1:] if r]
    starts = np.array([float(r[0]) for r in body])
    values = np.array([[float(v) for v in r[1:1 + len(columns)]] for r in body]).reshape(len(body), len(columns))
    labels = np.array([int(r[-1]) for r in body]) if has_label else None
    return FeatureMatrix(values, columns, starts), labels
