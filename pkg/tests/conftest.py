import numpy as np
import pytest

from speechdur.classify import LabeledDataset
from speechdur.features import FeatureMatrix

_CRITERIA: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(name, passed, detail)``."""

    def record(name, passed, detail=""):
        _CRITERIA.append((name, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")


def make_blobs(n_rows=200, n_cols=14, separation=6.0, seed=0):
    """Two unit-variance Gaussian blobs whose centres are ``separation`` sigma apart."""
    rng = np.random.default_rng(seed)
    y = np.arange(n_rows) % 2
    direction = np.ones(n_cols) / np.sqrt(n_cols)
    X = rng.normal(size=(n_rows, n_cols)) + np.outer(y, direction * separation)
    return X, y


def as_dataset(X, y, prefix="c"):
    cols = tuple(f"{prefix}{i}" for i in range(X.shape[1]))
    return LabeledDataset(FeatureMatrix(np.asarray(X, float), cols, np.arange(len(y), dtype=float)), y)


@pytest.fixture
def blobs():
    X, y = make_blobs()
    return as_dataset(X, y)


@pytest.fixture(scope="session")
def corpus():
    from speechdur.synth import gen_corpus

    return gen_corpus(10, seed=0)


@pytest.fixture(scope="session")
def corpus_datasets(corpus):
    from speechdur.pipeline import LabeledRecording, build_dataset
    from speechdur.signal import PipelineConfig

    recs = [LabeledRecording(r.records, r.truth, r.subject) for r in corpus]
    return {fs: build_dataset(recs, PipelineConfig(), fs) for fs in ("pressure", "accel", "both")}
