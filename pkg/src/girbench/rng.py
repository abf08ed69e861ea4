"""Deterministic, splittable random streams.

Every stochastic operator takes an explicit :class:`RngStream`; nothing in the
package touches global RNG state. Streams for independent work units (image,
pipeline step) are derived from a master seed plus two lane indices, so editing
one step of a recipe never perturbs the draws consumed by another.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
# Distinct salts keep the two lane positions asymmetric: stream (a, b) must
# not collide with stream (b, a).
_LANE_A_SALT = 0xA0761D6478BD642F
_LANE_B_SALT = 0xE7037ED1A0B428DB


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns (new_state, 64-bit output)."""
    state = (state + _GOLDEN) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def mix64(x: int) -> int:
    """Splitmix64 finalizer applied to a single value."""
    return splitmix64(x & _MASK64)[1]


class RngStream:
    """A deterministic random stream with a fixed 64-bit seed.

    Identical seeds produce identical draw sequences on every platform and
    under any thread count. Gaussian draws use the Box-Muller transform on the
    stream's uniforms so the mapping from seed to noise field is pinned by
    this module, not by the backing generator's normal() implementation.
    """

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, low: int, high_inclusive: int, size=None):
        return self._gen.integers(low, high_inclusive, size, endpoint=True)

    def bits64(self) -> int:
        """One uniform 64-bit integer (for seeding derived documents)."""
        return int(self._gen.integers(0, _MASK64, dtype=np.uint64, endpoint=True))

    def normal(self, sigma: float, size) -> np.ndarray:
        """Box-Muller gaussian draws with mean 0 and the given std."""
        n = int(np.prod(size))
        u1 = 1.0 - self._gen.random(n)  # in (0, 1]: log() stays finite
        u2 = self._gen.random(n)
        z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
        return (sigma * z).reshape(size)


def derive_rng(master_seed: int, lane_a: int, lane_b: int) -> RngStream:
    """Derive the stream for one (lane_a, lane_b) work unit.

    The seed is splitmix64-mixed from the master seed and salted lane hashes;
    streams for distinct lane pairs are statistically independent.
    """
    s = (master_seed & _MASK64) ^ mix64(lane_a ^ _LANE_A_SALT) ^ mix64(lane_b ^ _LANE_B_SALT)
    return RngStream(mix64(s))


def lane_of(text: str) -> int:
    """Stable 64-bit lane index for a string id (FNV-1a)."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h
