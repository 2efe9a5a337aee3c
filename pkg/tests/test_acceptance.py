"""The ten acceptance criteria, one test each; PASS/FAIL lines print at the end of the run."""
import cmath
import math
import time
from pathlib import Path

import numpy as np
from conftest import as_dataset, make_blobs

from speechdur.classify import load_model, predict, save_model, train
from speechdur.cli import main
from speechdur.duration import AnnotationTrack, estimate_duration, label_windows
from speechdur.evaluation import cross_validate
from speechdur.features import FeatureMatrix, feature_layout, featurize_window, peak_frequency, spectrum
from speechdur.pipeline import LabeledRecording, build_dataset
from speechdur.signal import (
    ACCEL_CHANNELS,
    Channel,
    ChannelSeries,
    PipelineConfig,
    SensorRecord,
    WindowSegment,
    regularize,
    segment,
    smooth,
)
from speechdur.synth import gen_corpus

RATE = 8.0


def naive_dft(x):
    n = len(x)
    return np.array([sum(x[t] * cmath.exp(-2j * math.pi * k * t / n) for t in range(n)) for k in range(n)])


def test_c01_table_ii_arithmetic(criterion):
    counts = (102, 99, 104, 134, 166, 138, 88, 145, 109)
    expected = (459, 445.5, 468, 603, 747, 621, 396, 652.5, 490.5)
    start = time.perf_counter()
    got = tuple(estimate_duration([1] * c).estimated_seconds for c in counts)
    elapsed = time.perf_counter() - start
    ok = got == expected and elapsed < 1.0
    criterion("1 duration arithmetic", ok, f"{got} in {elapsed * 1e3:.2f} ms")
    assert ok


def test_c02_duration_invariant(criterion):
    rng = np.random.default_rng(2)
    bad = 0
    for _ in range(1000):
        preds = rng.integers(0, 2, rng.integers(0, 400))
        est = estimate_duration(preds).estimated_seconds
        q = est / 4.5
        if q != int(q) or est > len(preds) * 4.5:
            bad += 1
    criterion("2 duration invariant", bad == 0, f"{bad} of 1000 vectors violate")
    assert bad == 0


def test_c03_spectral_correctness(criterion):
    rng = np.random.default_rng(3)
    worst = 0.0
    for n in (48, 64):
        for _ in range(200):
            x = rng.normal(size=n)
            oracle = np.abs(naive_dft(list(x)))[: n // 2 + 1]
            worst = max(worst, float(np.max(np.abs(spectrum(x, RATE).magnitudes - oracle))))
    least_share = 1.0
    for n in (48, 64):
        t = np.arange(n) / RATE
        for k in range(1, n // 2):
            mags = spectrum(np.sin(2 * np.pi * k * RATE / n * t), RATE).magnitudes
            energy = mags[1:] ** 2
            least_share = min(least_share, float(energy[k - 1] / energy.sum()))
    ok = worst <= 1e-9 and least_share >= 0.999
    criterion("3 spectral correctness", ok, f"max abs err {worst:.2e}, min on-bin energy share {least_share:.6f}")
    assert ok


def test_c04_peak_frequency_rule(criterion):
    failures = []
    for n in (48, 64):
        t = np.arange(n) / RATE
        freqs = np.arange(n // 2 + 1) * RATE / n
        band_bins = [f for f in freqs if 0.13 <= f <= 0.66]
        for f in band_bins:
            got = peak_frequency(spectrum(np.sin(2 * np.pi * f * t), RATE))
            if abs(got - f) > 1e-12:
                failures.append((n, f, got))
        for f in (1.0, 2.0):
            got = peak_frequency(spectrum(np.sin(2 * np.pi * f * t), RATE))
            if got != 0.0:
                failures.append((n, f, got))
    criterion("4 peak-frequency rule", not failures, f"failures {failures}" if failures else "all bins")
    assert not failures


def test_c05_filter_contract(criterion):
    cfg = PipelineConfig()
    t = np.arange(720) / RATE

    def run(x):
        return smooth(ChannelSeries(Channel.PRESSURE, RATE, x), cfg).samples

    rng = np.random.default_rng(5)
    sym = 0.0
    for _ in range(20):
        x = rng.normal(size=int(rng.integers(13, 800)))
        sym = max(sym, float(np.max(np.abs(run(x[::-1]) - run(x)[::-1]))))

    def gain_db(freq):
        x = np.sin(2 * np.pi * freq * t)
        y = run(x)
        A = np.column_stack([np.sin(2 * np.pi * freq * t), np.cos(2 * np.pi * freq * t)])
        amp = lambda v: float(np.hypot(*np.linalg.lstsq(A, v, rcond=None)[0]))  # noqa: E731
        return 20 * np.log10(amp(y) / amp(x))

    pass_db = gain_db(0.3)
    drift_db = gain_db(0.01)
    dc = run(np.full(720, 1013.25))
    dc_peak = float(np.max(np.abs(dc)))
    dc_db = -np.inf if dc_peak == 0 else 20 * np.log10(dc_peak / 1013.25)
    start = time.perf_counter()
    run(rng.normal(size=720))
    elapsed = time.perf_counter() - start
    ok = sym <= 1e-9 and abs(pass_db) <= 1.0 and dc_db <= -20 and drift_db <= -20 and elapsed < 0.1
    criterion("5 filter contract", ok, f"reversal {sym:.1e}, 0.3 Hz {pass_db:+.2f} dB, "
              f"0.01 Hz {drift_db:.1f} dB, DC residual {dc_peak:.1e} hPa, {elapsed * 1e3:.1f} ms")
    assert ok


def test_c06_feature_layout(criterion):
    widths = []
    for chans in ((Channel.PRESSURE,), ACCEL_CHANNELS, (Channel.PRESSURE, *ACCEL_CHANNELS)):
        w = WindowSegment(0.0, 6.0, {c: np.random.default_rng(6).normal(size=48) for c in chans})
        v = featurize_window(w, RATE)
        widths.append(len(v.values) if v.layout == feature_layout(chans) else -1)
    recs = [SensorRecord(i / RATE, 1013 + np.sin(i / 5), 0.0, 0.0, 1.0) for i in range(480)]
    n_windows = len(segment(regularize(recs, PipelineConfig()), PipelineConfig()))
    ok = widths == [14, 42, 56] and n_windows == 13
    criterion("6 feature layout", ok, f"widths {widths}, 60 s -> {n_windows} windows")
    assert ok


def test_c07_window_labeling_rule(criterion):
    # endpoints on a quarter-second grid, so coverage is an exact count of grid cells
    rng = np.random.default_rng(7)
    q = 0.25
    cells = 240
    starts = np.arange(13) * 4.5
    windows = [WindowSegment(s, 6.0, {Channel.PRESSURE: np.zeros(48)}) for s in starts]
    total = disagree = 0
    while total < 10_000:
        cuts = np.sort(rng.choice(np.arange(cells + 1), size=2 * int(rng.integers(0, 8)), replace=False))
        intervals = [(a * q, b * q) for a, b in zip(cuts[::2], cuts[1::2])]
        covered = np.zeros(cells, dtype=bool)
        for a, b in zip(cuts[::2], cuts[1::2]):
            covered[a:b] = True
        labels = label_windows(windows, AnnotationTrack(tuple(intervals)))
        for w, lab in zip(windows, labels):
            lo = int(round(w.start_time / q))
            oracle = int(covered[lo:lo + 24].sum() > 12)
            disagree += lab != oracle
            total += 1
    criterion("7 window labeling", disagree == 0, f"{disagree} disagreements in {total} cases")
    assert disagree == 0


def test_c08_end_to_end_synthetic(criterion):
    start = time.perf_counter()
    corpus = gen_corpus(10, seed=0)
    recs = [LabeledRecording(r.records, r.truth, r.subject) for r in corpus]
    acc = {}
    for fs in ("pressure", "accel", "both"):
        ds = build_dataset(recs, PipelineConfig(), fs)
        acc[fs] = cross_validate(ds, "rf", seed=0, n_splits=10, holdout=0.10).mean_accuracy
    elapsed = time.perf_counter() - start
    ok = (acc["both"] >= 0.90 and acc["both"] >= acc["pressure"] and acc["both"] >= acc["accel"]
          and elapsed < 60)
    criterion("8 end-to-end synthetic", ok,
              f"RF combined {acc['both']:.3f}, pressure {acc['pressure']:.3f}, "
              f"accel {acc['accel']:.3f} in {elapsed:.1f} s")
    assert ok


def test_c09_classifier_sanity(criterion):
    X, y = make_blobs(1000, 14, separation=6.0, seed=0)
    separable = {k: cross_validate(as_dataset(X, y), k, seed=0).mean_accuracy for k in ("rf", "svm", "knn")}
    Xs, ys = make_blobs(400, 14, separation=6.0, seed=1)
    ys = np.random.default_rng(9).permutation(ys)
    shuffled = {k: cross_validate(as_dataset(Xs, ys), k, seed=0).mean_accuracy for k in ("rf", "svm", "knn")}
    ok = all(v >= 0.99 for v in separable.values()) and all(0.35 <= v <= 0.65 for v in shuffled.values())
    fmt = lambda d: ", ".join(f"{k} {v:.3f}" for k, v in d.items())  # noqa: E731
    criterion("9 classifier sanity", ok, f"separable [{fmt(separable)}], shuffled [{fmt(shuffled)}]")
    assert ok


def _snapshot(paths):
    return {p: p.read_bytes() for p in paths}


def test_c10_determinism(criterion, tmp_path):
    data = tmp_path / "data"
    runs = {
        "synth": (["synth", "-o", str(data), "--subjects", "3", "--duration", "60", "--seed", "1"],
                  data / "config.toml", lambda: sorted(data.iterdir())),
    }
    mismatched = []

    def check(name, argv, echo, outputs):
        assert main(argv) == 0, name
        first = _snapshot(outputs())
        assert main([argv[0], "--config", str(echo)]) == 0, name
        second = _snapshot(outputs())
        if first != second:
            mismatched.append(name)

    check("synth", *runs["synth"])
    rec = data / "s02_speech.csv"
    ann = data / "s02_speech.annotations.csv"
    model = tmp_path / "m.json"

    def files(*names):
        return lambda: [tmp_path / n for n in names]

    check("featurize", ["featurize", str(rec), "--annotations", str(ann), "-o", str(tmp_path / "f.csv")],
          tmp_path / "f.csv.config.toml", files("f.csv", "f.csv.config.toml"))
    check("train", ["train", "--data", str(data), "--model", "rf", "-o", str(model)],
          tmp_path / "m.json.config.toml", files("m.json", "m.json.config.toml"))
    check("cv", ["cv", "--data", str(data), "--model", "knn", "--features", "all", "-o", str(tmp_path / "cv.csv")],
          tmp_path / "cv.csv.config.toml", files("cv.csv", "cv.csv.summary.txt", "cv.csv.config.toml"))
    for cmd, extra in (("predict", []), ("estimate", []), ("eval-meeting", ["--annotations", str(ann)])):
        out = tmp_path / f"{cmd}.out"
        check(cmd, [cmd, str(rec), "-m", str(model), "-o", str(out), *extra],
              Path(f"{out}.config.toml"), lambda out=out: [out, Path(f"{out}.config.toml")])

    X, y = make_blobs(200, 14, separation=2.0, seed=10)
    ds = as_dataset(X, y)
    probe = FeatureMatrix(np.random.default_rng(10).normal(size=(1000, 14)) * 3, ds.matrix.columns, np.zeros(1000))
    round_trip_bad = []
    for kind in ("rf", "svm", "knn"):
        m = train(ds, kind, seed=3)
        back = load_model(save_model(m))
        if not np.array_equal(predict(m, probe), predict(back, probe)) or save_model(back) != save_model(m):
            round_trip_bad.append(kind)
    ok = not mismatched and not round_trip_bad
    criterion("10 determinism", ok, f"7 commands replayed, mismatched {mismatched}; "
              f"save/load on 1000 vectors, failing {round_trip_bad}")
    assert ok
