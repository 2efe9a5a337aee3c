"""Run configuration: defaults, overridden by a TOML file, overridden by flags.

The merged configuration is written next to every artifact a command
produces; passing that file back through ``--config`` replays the run.
"""
from __future__ import annotations

import copy
import sys
from dataclasses import fields
from pathlib import Path
from typing import Any, Mapping

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .classify import DEFAULT_HYPERPARAMS, ModelKind
from .errors import ConfigError
from .signal import PipelineConfig

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "model": "rf",
    "features": "both",
    "pipeline": {f.name: f.default for f in fields(PipelineConfig)},
    "rf": {k: v for k, v in DEFAULT_HYPERPARAMS[ModelKind.RF].items() if v is not None},
    "svm": {k: v for k, v in DEFAULT_HYPERPARAMS[ModelKind.SVM].items() if v is not None},
    "knn": dict(DEFAULT_HYPERPARAMS[ModelKind.KNN]),
    "cv": {"n_splits": 10, "holdout": 0.10, "kfold": False, "by_subject": False},
    "duration": {"window_credit_s": 4.5, "threshold_s": 3.0},
    "synth": {"subjects": 10, "duration_s": 90.0},
    "paths": {},
}


def merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> dict[str, Any]:
    out = copy.deepcopy(dict(base))
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), Mapping):
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _check_keys(cfg: Mapping[str, Any], reference: Mapping[str, Any], where: str = "") -> None:
    for key, value in cfg.items():
        if key == "command":
            continue
        if key not in reference:
            raise ConfigError(f"unknown config key {where}{key!r}")
        ref = reference[key]
        if isinstance(value, Mapping):
            if not isinstance(ref, Mapping):
                raise ConfigError(f"config key {where}{key!r} is not a table")
            if key not in ("paths", "rf", "svm", "knn"):
                _check_keys(value, ref, f"{where}{key}.")


def load_file(path: str | Path) -> dict[str, Any]:
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}") from None
    _check_keys(data, DEFAULTS)
    return data


def resolve(file_values: Mapping[str, Any] | None, flag_values: Mapping[str, Any]) -> dict[str, Any]:
    cfg = merge(DEFAULTS, file_values or {})
    return merge(cfg, flag_values)


def pipeline_config(cfg: Mapping[str, Any]) -> PipelineConfig:
    return PipelineConfig(**{k: float(v) for k, v in cfg["pipeline"].items()})


def hyperparams(cfg: Mapping[str, Any], kind: ModelKind | str) -> dict[str, Any]:
    return dict(cfg[ModelKind(kind).value])


def dumps(cfg: Mapping[str, Any]) -> str:
    # TOML has no null, so unset values are dropped; sorted keys keep the echo canonical
    def strip(d):
        return {k: strip(d[k]) if isinstance(d[k], Mapping) else d[k] for k in sorted(d) if d[k] is not None}
    return tomli_w.dumps(strip(cfg))


def echo(path: str | Path, cfg: Mapping[str, Any]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dumps(cfg))
