"""Ingestion, resampling, smoothing and windowing of abdominal-motion recordings.

Stages are composed in a fixed order::

    regularize -> smooth -> discard_warmup -> segment

Every function is pure; inputs are never mutated.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.signal import butter, filtfilt

from .errors import (
    ConfigError,
    MixedChannelPresence,
    NonMonotonicTimestamps,
    RateMismatchAcrossChannels,
    SeriesShorterThanWindow,
    SeriesTooShort,
    TooFewSamples,
)

# time comparisons on the sample grid
_EPS = 1e-9


class Channel(str, enum.Enum):
    PRESSURE = "pressure"
    ACCEL_X = "accel_x"
    ACCEL_Y = "accel_y"
    ACCEL_Z = "accel_z"


CHANNEL_ORDER = (Channel.PRESSURE, Channel.ACCEL_X, Channel.ACCEL_Y, Channel.ACCEL_Z)
ACCEL_CHANNELS = CHANNEL_ORDER[1:]


def order_channels(channels: Iterable[Channel]) -> tuple[Channel, ...]:
    present = set(channels)
    return tuple(c for c in CHANNEL_ORDER if c in present)


@dataclass(frozen=True)
class SensorRecord:
    """One raw device sample. ``t`` is seconds from the start of the recording."""

    t: float
    pressure: float | None = None
    accel_x: float | None = None
    accel_y: float | None = None
    accel_z: float | None = None

    def channels(self) -> tuple[Channel, ...]:
        out = []
        if self.pressure is not None:
            out.append(Channel.PRESSURE)
        accel = (self.accel_x, self.accel_y, self.accel_z)
        n_accel = sum(v is not None for v in accel)
        if n_accel == 3:
            out.extend(ACCEL_CHANNELS)
        elif n_accel:
            raise MixedChannelPresence(f"partial acceleration triple at t={self.t}")
        return tuple(out)


@dataclass(frozen=True)
class ChannelSeries:
    """Uniformly sampled values of a single channel.

    ``t0`` is the time of the first sample in recording time, so windows cut
    after a warm-up discard keep their position relative to annotations.
    """

    channel: Channel
    sample_rate: float
    samples: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ConfigError(f"sample_rate must be positive, got {self.sample_rate}")
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size < 1:
            raise TooFewSamples("a channel series needs at least one sample")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.sample_rate


@dataclass(frozen=True)
class WindowSegment:
    start_time: float
    duration: float
    channels: Mapping[Channel, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        lengths = {len(v) for v in self.channels.values()}
        if len(lengths) > 1:
            raise RateMismatchAcrossChannels(f"window slices differ in length: {sorted(lengths)}")

    @property
    def end_time(self) -> float:
        return self.start_time + self.duration

    @property
    def channel_set(self) -> tuple[Channel, ...]:
        return order_channels(self.channels)

    def select(self, channels: Sequence[Channel]) -> "WindowSegment":
        missing = [c.value for c in channels if c not in self.channels]
        if missing:
            raise MixedChannelPresence(f"window lacks channels {missing}")
        return replace(self, channels={c: self.channels[c] for c in order_channels(channels)})


@dataclass(frozen=True)
class PipelineConfig:
    target_rate: float = 8.0
    window_s: float = 6.0
    overlap_fraction: float = 0.25
    warmup_discard_s: float = 30.0
    band_low: float = 0.05
    band_high: float = 3.0

    def __post_init__(self):
        if not self.target_rate > 0:
            raise ConfigError("target_rate must be positive")
        if not 0 < self.band_low < self.band_high < self.target_rate / 2:
            raise ConfigError(
                f"need 0 < band_low < band_high < target_rate/2, got "
                f"{self.band_low}, {self.band_high}, rate {self.target_rate}"
            )
        if not 0 <= self.overlap_fraction < 1:
            raise ConfigError("overlap_fraction must lie in [0, 1)")
        if self.window_s * self.target_rate < 8 - _EPS:
            raise ConfigError("window must hold at least 8 samples")
        if self.warmup_discard_s < 0:
            raise ConfigError("warmup_discard_s must be non-negative")

    @property
    def hop_s(self) -> float:
        return self.window_s * (1.0 - self.overlap_fraction)

    def window_samples(self) -> int:
        return _whole_samples(self.window_s * self.target_rate, "window_s * target_rate")

    def hop_samples(self) -> int:
        return _whole_samples(self.hop_s * self.target_rate, "hop length * target_rate")


def _whole_samples(x: float, what: str) -> int:
    n = round(x)
    if abs(x - n) > 1e-6 or n < 1:
        raise ConfigError(f"{what} must be a positive whole number of samples, got {x}")
    return int(n)


# --------------------------------------------------------------------------- io

CSV_HEADER = ("t", "pressure", "ax", "ay", "az")


def _parse_optional(text: str) -> float | None:
    text = text.strip()
    return float(text) if text else None


def read_recording_csv(path: str | Path) -> list[SensorRecord]:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise ValueError(f"expected header {','.join(CSV_HEADER)}, got {header}")
        records = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise ValueError(f"line {lineno}: expected {len(CSV_HEADER)} fields, got {len(row)}")
            t, p, ax, ay, az = (_parse_optional(v) for v in row)
            if t is None:
                raise ValueError(f"line {lineno}: missing timestamp")
            records.append(SensorRecord(t, p, ax, ay, az))
    return records


def _fmt(v: float | None) -> str:
    return "" if v is None else repr(float(v))


def write_recording_csv(path: str | Path, records: Iterable[SensorRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow([_fmt(r.t), _fmt(r.pressure), _fmt(r.accel_x), _fmt(r.accel_y), _fmt(r.accel_z)])


# --------------------------------------------------------------------- stages

def regularize(records: Sequence[SensorRecord], cfg: PipelineConfig) -> dict[Channel, ChannelSeries]:
    """Linearly interpolate a jittered record stream onto an exact ``cfg.target_rate`` grid.

    The grid starts at the first timestamp and stops at the last grid point
    not beyond the final timestamp, so nothing is extrapolated.
    """
    if len(records) < 2:
        raise TooFewSamples(f"need at least 2 records, got {len(records)}")
    channels = records[0].channels()
    if not channels:
        raise MixedChannelPresence("first record carries no channel")
    for r in records:
        if r.channels() != channels:
            raise MixedChannelPresence(f"record at t={r.t} has channels {r.channels()}, expected {channels}")

    t = np.array([r.t for r in records], dtype=float)
    if not np.all(np.isfinite(t)):
        raise NonMonotonicTimestamps("timestamps must be finite")
    steps = np.diff(t)
    if np.any(steps <= 0):
        i = int(np.argmax(steps <= 0))
        raise NonMonotonicTimestamps(f"timestamp {t[i + 1]} at index {i + 1} does not exceed {t[i]}")

    rate = cfg.target_rate
    n = int(math.floor((t[-1] - t[0]) * rate + _EPS)) + 1
    grid = t[0] + np.arange(n) / rate
    # guard the last grid point against rounding past the final timestamp
    grid[-1] = min(grid[-1], t[-1])

    out = {}
    for ch in channels:
        values = np.array([getattr(r, ch.value) for r in records], dtype=float)
        out[ch] = ChannelSeries(ch, rate, np.interp(grid, t, values), t0=float(t[0]))
    return out


FILTER_ORDER = 2


def _bandpass_coefficients(cfg: PipelineConfig, rate: float):
    # first-order Butterworth prototype -> one second-order band-pass section
    return butter(1, [cfg.band_low, cfg.band_high], btype="bandpass", fs=rate)


def influence_samples(cfg: PipelineConfig, rate: float) -> int:
    """Samples spanned by one time constant of the high-pass edge."""
    return int(math.ceil(rate / (2 * math.pi * cfg.band_low)))


def smooth(series: ChannelSeries, cfg: PipelineConfig) -> ChannelSeries:
    """Zero-phase band-pass filter (``band_low``..``band_high``) of one channel.

    The forward-backward pass is averaged with its time-reversed twin so the
    result commutes exactly with time reversal.
    """
    n = len(series)
    if n <= 6 * FILTER_ORDER:
        raise SeriesTooShort(f"smoothing needs more than {6 * FILTER_ORDER} samples, got {n}")
    b, a = _bandpass_coefficients(cfg, series.sample_rate)
    padlen = min(3 * influence_samples(cfg, series.sample_rate), n - 1)

    def run(x):
        return filtfilt(b, a, x, padtype="odd", padlen=padlen)

    x = series.samples
    y = 0.5 * (run(x) + run(x[::-1])[::-1])
    return replace(series, samples=y)


def discard_warmup(series: ChannelSeries, cfg: PipelineConfig) -> ChannelSeries:
    if cfg.warmup_discard_s == 0:
        return series
    if series.duration <= cfg.warmup_discard_s:
        raise SeriesTooShort(
            f"{series.channel.value}: {series.duration:g} s recording cannot lose a "
            f"{cfg.warmup_discard_s:g} s warm-up"
        )
    drop = int(round(cfg.warmup_discard_s * series.sample_rate))
    return replace(
        series,
        samples=series.samples[drop:],
        t0=series.t0 + drop / series.sample_rate,
    )


def segment(channels: Mapping[Channel, ChannelSeries] | Iterable[ChannelSeries],
            cfg: PipelineConfig) -> list[WindowSegment]:
    """Cut aligned channels into complete windows; a trailing partial window is dropped."""
    if isinstance(channels, Mapping):
        series = list(channels.values())
    else:
        series = list(channels)
    if not series:
        raise TooFewSamples("no channels to segment")
    rates = {s.sample_rate for s in series}
    lengths = {len(s) for s in series}
    starts = {s.t0 for s in series}
    if len(rates) > 1 or len(lengths) > 1 or len(starts) > 1:
        raise RateMismatchAcrossChannels(
            f"channels disagree: rates {sorted(rates)}, lengths {sorted(lengths)}"
        )
    rate = series[0].sample_rate
    if abs(rate - cfg.target_rate) > _EPS:
        raise RateMismatchAcrossChannels(f"series rate {rate} differs from target {cfg.target_rate}")

    width = cfg.window_samples()
    hop = cfg.hop_samples()
    n = lengths.pop()
    if n < width:
        raise SeriesShorterThanWindow(f"{n} samples is shorter than one {width}-sample window")

    by_channel = {s.channel: s.samples for s in series}
    ordered = order_channels(by_channel)
    t0 = series[0].t0
    windows = []
    for k in range((n - width) // hop + 1):
        lo = k * hop
        windows.append(
            WindowSegment(
                start_time=t0 + lo / rate,
                duration=cfg.window_s,
                channels={c: by_channel[c][lo:lo + width] for c in ordered},
            )
        )
    return windows


def prepare(records: Sequence[SensorRecord], cfg: PipelineConfig) -> list[WindowSegment]:
    """Run the full preprocessing chain on one recording."""
    series = regularize(records, cfg)
    cleaned = {c: discard_warmup(smooth(s, cfg), cfg) for c, s in series.items()}
    return segment(cleaned, cfg)
