"""Soft-margin RBF support vector machine trained by sequential minimal optimization.

Working-set selection picks the maximal violating pair each iteration, so the
solver is deterministic and needs no random pair choice. Labels are mapped to
``+1`` (Speech) and ``-1`` (NoSpeech) internally.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_TAU = 1e-12


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


def default_gamma(X: np.ndarray) -> float:
    """``1 / (d * mean column variance)``; 1.0 if every column is constant."""
    var = float(np.mean(np.var(X, axis=0)))
    if var <= 0:
        return 1.0
    return 1.0 / (X.shape[1] * var)


@dataclass
class SvmSolution:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i
    bias: float
    gamma: float
    n_iter: int

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        if self.support_vectors.shape[0] == 0:
            return np.full(X.shape[0], self.bias)
        return rbf_kernel(X, self.support_vectors, self.gamma) @ self.dual_coef + self.bias

    def predict(self, X: np.ndarray) -> np.ndarray:
        # the zero boundary goes to Speech
        return (self.decision_function(X) >= 0).astype(int)


def fit_svm(X: np.ndarray, labels: np.ndarray, C: float = 1.0, gamma: float | None = None,
            tol: float = 1e-3, max_iter: int | None = None) -> SvmSolution:
    y = np.where(np.asarray(labels) == 1, 1.0, -1.0)
    n = X.shape[0]
    if gamma is None:
        gamma = default_gamma(X)
    if max_iter is None:
        max_iter = max(100_000, 100 * n)
    K = rbf_kernel(X, X, gamma)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 0.5 a'Qa - e'a with Q = yy' * K

    it = 0
    while it < max_iter:
        yg = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not np.any(up) or not np.any(low):
            break
        i = int(np.argmax(np.where(up, yg, -np.inf)))
        j = int(np.argmin(np.where(low, yg, np.inf)))
        gap = yg[i] - yg[j]
        if gap < tol:
            break
        curvature = K[i, i] + K[j, j] - 2.0 * K[i, j]
        step = gap / max(curvature, _TAU)
        # feasible step along alpha_i += y_i * s, alpha_j -= y_j * s
        step = min(step, C - alpha[i] if y[i] > 0 else alpha[i])
        step = min(step, alpha[j] if y[j] > 0 else C - alpha[j])
        d_i = y[i] * step
        d_j = -y[j] * step
        alpha[i] = min(max(alpha[i] + d_i, 0.0), C)
        alpha[j] = min(max(alpha[j] + d_j, 0.0), C)
        grad += y * (y[i] * K[:, i] * d_i + y[j] * K[:, j] * d_j)
        it += 1

    yg = -y * grad
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        bias = float(np.mean(yg[free]))
    else:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        hi = np.max(yg[up]) if np.any(up) else 0.0
        lo = np.min(yg[low]) if np.any(low) else 0.0
        bias = float(0.5 * (hi + lo))

    sv = alpha > 0
    return SvmSolution(
        support_vectors=X[sv].copy(),
        dual_coef=(alpha * y)[sv],
        bias=bias,
        gamma=float(gamma),
        n_iter=it,
    )
