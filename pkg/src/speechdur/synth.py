"""Seeded synthetic abdominal-motion recordings with known speech intervals.

Quiet breathing is a slow sinusoid on top of a constant bag pressure, a
linear drift and white noise. Speech intervals are tiled into phrases; inside
each phrase the breathing carrier is louder and restarts at a random phase,
and a 1-3 Hz burst component with slow amplitude modulation is added.
Phrases are tapered so the waveform stays continuous. Acceleration is the
scaled time derivative of the noise-free pressure on three axes, each with
its own gain and independent noise; the z axis carries gravity.

Randomness is split into independent streams per purpose, so adding speech
to a recording leaves its noise and jitter untouched.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .duration import AnnotationTrack
from .errors import ConfigError, DurationTooShort, IntervalOutOfRange
from .features import BREATHING_BAND
from .seeding import derive_rng, derive_seed
from .signal import SensorRecord

DEVICE_RATE = 8.0
JITTER_S = 0.010
BASE_PRESSURE_HPA = 1013.25
AXIS_GAINS = (0.3, 0.5, 1.0)
GRAVITY_G = 1.0
PHRASE_S = (2.0, 5.0)
TAPER_S = 0.3
MIN_DURATION_S = 12.0


@dataclass(frozen=True)
class SynthProfile:
    breathing_rate: float = 0.25
    breathing_amp: float = 0.3
    speech_burst_rate: float = 2.0
    speech_amp_factor: float = 2.5
    noise_std: float = 0.01
    drift_rate: float = 0.002
    accel_coupling: float = 0.05
    seed: int = 0

    def __post_init__(self):
        lo, hi = BREATHING_BAND
        if not lo <= self.breathing_rate <= hi:
            raise ConfigError(f"breathing_rate {self.breathing_rate} outside [{lo}, {hi}] Hz")
        if not 1.0 <= self.speech_burst_rate <= 3.0:
            raise ConfigError("speech_burst_rate must lie in [1, 3] Hz")
        if self.speech_amp_factor < 1:
            raise ConfigError("speech_amp_factor must be >= 1")
        if self.noise_std < 0 or self.breathing_amp < 0:
            raise ConfigError("noise_std and breathing_amp must be non-negative")


@dataclass(frozen=True)
class ProfileRanges:
    """Closed ranges each subject's profile is drawn from."""

    breathing_rate: tuple[float, float] = (0.20, 0.40)
    breathing_amp: tuple[float, float] = (0.20, 0.45)
    speech_burst_rate: tuple[float, float] = (1.5, 2.5)
    speech_amp_factor: tuple[float, float] = (2.0, 3.0)
    noise_std: tuple[float, float] = (0.005, 0.02)
    drift_rate: tuple[float, float] = (-0.003, 0.003)
    accel_coupling: tuple[float, float] = (0.03, 0.07)


@dataclass(frozen=True)
class SynthRecording:
    records: list[SensorRecord]
    truth: AnnotationTrack
    profile: SynthProfile
    name: str = ""
    subject: str = ""
    condition: str = ""

    @property
    def duration_s(self) -> float:
        return len(self.records) / DEVICE_RATE


@dataclass
class _Phrase:
    start: float
    end: float
    carrier_phase: float
    burst_phase: float
    mod_phase: float


def _taper(t: np.ndarray, start: float, end: float) -> np.ndarray:
    """Raised-cosine window: 1 inside ``[start, end)`` with ``TAPER_S`` ramps."""
    ramp = min(TAPER_S, 0.5 * (end - start))
    w = ((t >= start) & (t < end)).astype(float)
    rise = (t >= start) & (t < start + ramp)
    fall = (t >= end - ramp) & (t < end)
    w[rise] = 0.5 - 0.5 * np.cos(np.pi * (t[rise] - start) / ramp)
    w[fall] = 0.5 - 0.5 * np.cos(np.pi * (end - t[fall]) / ramp)
    return w


def _phrases(truth: AnnotationTrack, rng: np.random.Generator) -> list[_Phrase]:
    out = []
    for s, e in truth.intervals:
        cur = s
        while cur < e:
            length = rng.uniform(*PHRASE_S)
            end = e if e - (cur + length) < PHRASE_S[0] / 2 else cur + length
            out.append(_Phrase(cur, end, *rng.uniform(0, 2 * np.pi, 3)))
            cur = end
    return out


def _clean_pressure(t: np.ndarray, profile: SynthProfile, phrases: Sequence[_Phrase],
                    base_phase: float) -> np.ndarray:
    two_pi = 2 * np.pi
    f_b = profile.breathing_rate
    speech_weight = np.zeros_like(t)
    speech = np.zeros_like(t)
    burst_amp = 0.5 * profile.speech_amp_factor * profile.breathing_amp
    for ph in phrases:
        w = _taper(t, ph.start, ph.end)
        speech_weight += w
        speech += w * profile.speech_amp_factor * profile.breathing_amp * np.sin(two_pi * f_b * t + ph.carrier_phase)
        envelope = 0.6 + 0.4 * np.sin(two_pi * 0.8 * t + ph.mod_phase)
        speech += w * burst_amp * envelope * np.sin(two_pi * profile.speech_burst_rate * t + ph.burst_phase)
    quiet = profile.breathing_amp * np.sin(two_pi * f_b * t + base_phase)
    return (BASE_PRESSURE_HPA + profile.drift_rate * t
            + (1.0 - np.clip(speech_weight, 0.0, 1.0)) * quiet + speech)


def gen_session(duration_s: float, speech_intervals: AnnotationTrack | Sequence[tuple[float, float]],
                profile: SynthProfile) -> SynthRecording:
    if duration_s < MIN_DURATION_S:
        raise DurationTooShort(f"synthetic recordings need at least {MIN_DURATION_S} s, got {duration_s}")
    truth = speech_intervals if isinstance(speech_intervals, AnnotationTrack) else AnnotationTrack(tuple(speech_intervals))
    for s, e in truth.intervals:
        if s < 0 or e > duration_s:
            raise IntervalOutOfRange(f"interval [{s}, {e}) outside [0, {duration_s})")

    seed = profile.seed
    n = int(round(duration_s * DEVICE_RATE))
    jitter = derive_rng(seed, "synth-jitter").uniform(-JITTER_S, JITTER_S, n)
    # start and stop stamps are exact so the resampled grid spans the full recording
    jitter[0] = jitter[-1] = 0.0
    t = np.arange(n) / DEVICE_RATE + jitter

    base_phase = float(derive_rng(seed, "synth-phase").uniform(0, 2 * np.pi))
    phrases = _phrases(truth, derive_rng(seed, "synth-phrases"))

    def clean(tt):
        return _clean_pressure(tt, profile, phrases, base_phase)

    p_noise = derive_rng(seed, "synth-pressure-noise").normal(0.0, profile.noise_std, n)
    a_noise = derive_rng(seed, "synth-accel-noise").normal(0.0, profile.accel_coupling * profile.noise_std, (3, n))
    pressure = clean(t) + p_noise
    h = 1e-3
    dp_dt = (clean(t + h) - clean(t - h)) / (2 * h)
    accel = [profile.accel_coupling * g * dp_dt + a_noise[i] for i, g in enumerate(AXIS_GAINS)]
    accel[2] = accel[2] + GRAVITY_G

    records = [
        SensorRecord(float(t[i]), float(pressure[i]), float(accel[0][i]), float(accel[1][i]), float(accel[2][i]))
        for i in range(n)
    ]
    return SynthRecording(records, truth, profile)


def gen_breathing(duration_s: float, profile: SynthProfile) -> SynthRecording:
    return gen_session(duration_s, AnnotationTrack(), profile)


def draw_profiles(n_subjects: int, ranges: ProfileRanges, seed: int) -> list[SynthProfile]:
    """One profile per subject.

    Breathing rates are drawn from disjoint equal strata of the range, so no two
    subjects share a rate; every other field is uniform over its range.
    """
    lo, hi = ranges.breathing_rate
    width = (hi - lo) / n_subjects
    profiles = []
    for i in range(n_subjects):
        rng = derive_rng(seed, "synth-subject", i)
        u = lambda r: float(rng.uniform(*r))  # noqa: E731
        profiles.append(SynthProfile(
            breathing_rate=float(lo + width * (i + rng.uniform(0.0, 1.0))),
            breathing_amp=u(ranges.breathing_amp),
            speech_burst_rate=u(ranges.speech_burst_rate),
            speech_amp_factor=u(ranges.speech_amp_factor),
            noise_std=u(ranges.noise_std),
            drift_rate=u(ranges.drift_rate),
            accel_coupling=u(ranges.accel_coupling),
            seed=derive_seed(seed, "synth-recording-seed", i),
        ))
    return profiles


def gen_corpus(n_subjects: int, profile_ranges: ProfileRanges | None = None, seed: int = 0,
               duration_s: float = 90.0) -> list[SynthRecording]:
    """A quiet and an all-speech recording per subject, in subject order."""
    if n_subjects < 1:
        raise ConfigError("n_subjects must be >= 1")
    ranges = profile_ranges or ProfileRanges()
    corpus = []
    for i, profile in enumerate(draw_profiles(n_subjects, ranges, seed)):
        subject = f"s{i + 1:02d}"
        quiet = gen_breathing(duration_s, profile)
        # a different stream for the speech take so the two are not noise twins
        talk_profile = replace(profile, seed=derive_seed(profile.seed, "synth-speech-take"))
        talk = gen_session(duration_s, AnnotationTrack(((0.0, duration_s),)), talk_profile)
        corpus.append(replace(quiet, name=f"{subject}_nospeech", subject=subject, condition="nospeech"))
        corpus.append(replace(talk, name=f"{subject}_speech", subject=subject, condition="speech"))
    return corpus
