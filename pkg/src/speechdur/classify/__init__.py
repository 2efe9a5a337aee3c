"""Speech/no-speech classifiers: random forest, RBF SVM and kNN."""
from .model import (
    DEFAULT_HYPERPARAMS,
    NO_SPEECH,
    SCHEMA_VERSION,
    SPEECH,
    LabeledDataset,
    ModelKind,
    TrainedModel,
    load_model,
    predict,
    resolve_hyperparams,
    save_model,
    train,
)

__all__ = [
    "DEFAULT_HYPERPARAMS",
    "NO_SPEECH",
    "SCHEMA_VERSION",
    "SPEECH",
    "LabeledDataset",
    "ModelKind",
    "TrainedModel",
    "load_model",
    "predict",
    "resolve_hyperparams",
    "save_model",
    "train",
]
