"""
Seed-afleiding en counter-gebaseerde random streams.

Alle randomness in stochlab hangt af van (master seed, soort object, index) via
de splitmix64-finalizer hieronder. Daardoor is elke trial of elke vlag los
reproduceerbaar, onafhankelijk van de volgorde waarin er gesampled wordt.

    mix64(x):
        z = x + 0x9E3779B97F4A7C15            (mod 2^64)
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB
        return z ^ (z >> 31)

    derive_seed(master, k1, k2, ...) = mix64(...mix64(mix64(master) ^ k1) ^ k2...)
"""

from enum import IntEnum
from typing import List

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB


class StreamKind(IntEnum):
    """Object-soorten die elk hun eigen stream krijgen."""
    bond = 1
    site = 2
    long_range = 3
    synapse = 4
    trial = 5
    initial = 6
    bisection = 7


def mix64(x: int) -> int:
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * _MUL1) & MASK64
    z = ((z ^ (z >> 27)) * _MUL2) & MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, *keys: int) -> int:
    h = mix64(master_seed & MASK64)
    for key in keys:
        h = mix64(h ^ (int(key) & MASK64))
    return h


def derive_trial_seed(master_seed: int, trial_index: int) -> int:
    """Stateless 64-bit seed voor trial `trial_index`; volgorde van aanroepen speelt geen rol."""
    return derive_seed(master_seed, trial_index)


def mix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized mix64 op uint64 arrays (wrap-around aritmetiek)."""
    z = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = z + np.uint64(GOLDEN_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
    return z ^ (z >> np.uint64(31))


def counter_uniforms(seed: int, kind: StreamKind, count: int) -> np.ndarray:
    """
    Uniformen in [0, 1): waarde i hangt uitsluitend af van (seed, kind, i).
    Element i = (mix64(derive_seed(seed, kind) ^ i) >> 11) * 2^-53.
    """
    base = np.uint64(derive_seed(seed, int(kind)))
    idx = np.arange(count, dtype=np.uint64)
    bits = mix64_array(idx ^ base) >> np.uint64(11)
    return bits.astype(np.float64) * (1.0 / (1 << 53))


def make_generator(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed & MASK64)


class UniformStream:
    """
    Gebufferde uniforme trekkingen voor event-loops in pure Python.

    Blokken van `block` waarden worden in één keer uit de Generator gehaald;
    de stream is dus deterministisch gegeven de seed.
    """

    def __init__(self, rng: np.random.Generator, block: int = 8192):
        self._rng = rng
        self._block = block
        self._buf: List[float] = []
        self._pos = 0

    def next(self) -> float:
        if self._pos >= len(self._buf):
            self._buf = self._rng.random(self._block).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def take(self, k: int) -> List[float]:
        """k opeenvolgende waarden (kan over een blokgrens lopen)."""
        return [self.next() for _ in range(k)]
