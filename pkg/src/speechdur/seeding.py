"""Sub-seed derivation: every random stream is a fixed hash of (seed, stage, index)."""
from __future__ import annotations

import zlib

import numpy as np


def derive_rng(seed: int, stage: str, index: int = 0) -> np.random.Generator:
    """Return an independent generator for ``(seed, stage, index)``.

    The stage name is reduced with CRC-32 so the mapping is stable across
    processes and Python versions (``hash()`` is salted per process).
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(stage.encode("utf-8")), int(index)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(seed: int, stage: str, index: int = 0) -> int:
    return int(derive_rng(seed, stage, index).integers(0, 2**63 - 1))
