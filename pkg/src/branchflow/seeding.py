"""Deterministic, purpose-labeled random streams.

All randomness in the package flows through one seed plus a tuple of
string labels, so changing the draws of one experiment never perturbs
another.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _entropy(seed: int, labels: tuple[str, ...]) -> list[int]:
    words = [int(seed) & _MASK64]
    for label in labels:
        digest = hashlib.sha256(label.encode("utf-8")).digest()
        words.extend(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))
    return words


def substream(seed: int, *labels: str) -> np.random.Generator:
    """Generator keyed by (seed, labels); distinct labels are independent."""
    return np.random.default_rng(np.random.SeedSequence(_entropy(seed, labels)))


def substream_seed(seed: int, *labels: str) -> int:
    """A plain 64-bit sub-seed, for APIs that take an integer seed."""
    ss = np.random.SeedSequence(_entropy(seed, labels))
    return int(ss.generate_state(1, np.uint64)[0])


def random_direction(rng: np.random.Generator, dim: int) -> np.ndarray:
    """A uniformly random unit vector."""
    while True:
        v = rng.normal(size=dim)
        norm = float(np.linalg.norm(v))
        if norm > 1e-12:
            return v / norm
