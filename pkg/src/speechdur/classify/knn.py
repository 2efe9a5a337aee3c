"""k-nearest-neighbour vote on z-scored features."""
from __future__ import annotations

import numpy as np


def predict_knn(train_X: np.ndarray, train_y: np.ndarray, X: np.ndarray, k: int) -> np.ndarray:
    """Majority label among the ``k`` nearest training rows (Euclidean).

    Distance ties are broken by training-row order; vote ties go to Speech.
    """
    k = min(k, train_X.shape[0])
    d2 = np.empty((X.shape[0], train_X.shape[0]))
    for i, row in enumerate(X):
        diff = train_X - row
        d2[i] = np.einsum("ij,ij->i", diff, diff)
    nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
    speech_votes = train_y[nearest].sum(axis=1)
    return (2 * speech_votes >= k).astype(int)
