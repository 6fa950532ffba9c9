"""Seedable random source with a fixed, platform-independent stream.

All randomness in the package goes through :class:`StableRng`.  It draws raw
64-bit words from numpy's PCG64 bit generator (whose output stream is part of
numpy's compatibility guarantee) and derives uniforms, normals and
permutations from those words with the fixed formulas below, so experiments
are byte-reproducible across numpy versions and platforms.
"""

from __future__ import annotations

import hashlib

import numpy as np

_TWO_POW_53 = float(2**53)


def child_seed(seed: int, *keys: object) -> int:
    """Derive a 64-bit seed from a parent seed and any number of keys.

    Order-independent across a corpus: the child depends only on its own keys,
    never on how many siblings were derived before it.
    """
    text = "/".join([str(int(seed))] + [str(k) for k in keys])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class StableRng:
    """PCG64 words -> uniforms (53-bit), Box-Muller normals, argsort permutations."""

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFF_FFFF_FFFF_FFFF
        self._bits = np.random.PCG64(self.seed)

    def child(self, *keys: object) -> "StableRng":
        return StableRng(child_seed(self.seed, *keys))

    def _raw(self, n: int) -> np.ndarray:
        return self._bits.random_raw(n)

    def uniform(self, size: int | None = None) -> np.ndarray | float:
        """Uniform draws on [0, 1)."""
        n = 1 if size is None else int(size)
        u = (self._raw(n) >> np.uint64(11)).astype(np.float64) / _TWO_POW_53
        return float(u[0]) if size is None else u

    def uniform_range(self, low: float, high: float, size: int | None = None):
        u = self.uniform(size)
        return low + (high - low) * u

    def normal(self, mean: float = 0.0, std: float = 1.0, size: int | None = None):
        n = 1 if size is None else int(size)
        m = (n + 1) // 2
        u1 = 1.0 - self.uniform(m)  # (0, 1], keeps log finite
        u2 = self.uniform(m)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])[:n]
        z = mean + std * z
        return float(z[0]) if size is None else z

    def integers(self, high: int, size: int | None = None):
        """Integers in [0, high)."""
        u = self.uniform(size)
        out = np.minimum(np.floor(np.asarray(u) * high), high - 1).astype(np.int64)
        return int(out) if size is None else out

    def permutation(self, n: int) -> np.ndarray:
        keys = self.uniform(n)
        return np.argsort(keys, kind="stable")
