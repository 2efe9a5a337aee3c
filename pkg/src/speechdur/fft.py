"""Mixed-radix decimation-in-time FFT for arbitrary lengths.

Window lengths here are small and rarely powers of two (6 s at 8 Hz is 48
samples), so composite lengths are split by their smallest prime factor and
prime lengths fall back to a direct DFT.
"""
from __future__ import annotations

import numpy as np


def _smallest_factor(n: int) -> int:
    if n % 2 == 0:
        return 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return f
        f += 2
    return n


def _direct_dft(x: np.ndarray) -> np.ndarray:
    n = x.size
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) @ x


def fft(x) -> np.ndarray:
    """Discrete Fourier transform ``X[k] = sum_t x[t] exp(-2 pi i k t / N)``."""
    x = np.asarray(x, dtype=complex)
    if x.ndim != 1:
        raise ValueError("fft expects a 1-D sequence")
    n = x.size
    if n <= 1:
        return x.copy()
    p = _smallest_factor(n)
    if p == n:
        return _direct_dft(x)
    m = n // p
    subs = [fft(x[r::p]) for r in range(p)]
    k = np.arange(n)
    out = np.zeros(n, dtype=complex)
    for r, sub in enumerate(subs):
        out += np.exp(-2j * np.pi * r * k / n) * sub[k % m]
    return out


def rfft_magnitude(x) -> np.ndarray:
    """One-sided magnitudes ``|X[k]|`` for ``k = 0 .. N // 2``."""
    x = np.asarray(x, dtype=float)
    return np.abs(fft(x)[: x.size // 2 + 1])
