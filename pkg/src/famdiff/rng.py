"""Replayable noise streams derived from a counter-based generator.

Every stochastic operation draws from a NoiseSource addressed by
(seed, stream, index). The generator is Philox keyed by the seed with the
(stream, index) pair folded into the counter, so any draw can be replayed
in isolation and distinct addresses never overlap, independent of platform
or draw order.
"""

import numpy as np

from .grid import LatentGrid

# stream ids; fixed so manifests and replays agree on addressing
STREAM_NATIVE = 0
STREAM_DIFFUSE = 1
STREAM_HIGH = 2
STREAM_INIT = 3
STREAM_WEIGHTS = 4
STREAM_DATA = 5


class NoiseSource:
    """Addressable Gaussian noise keyed by a single 64-bit seed."""

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF

    def generator(self, stream: int, index: int) -> np.random.Generator:
        """A fresh generator for one (stream, index) address."""
        counter = [0, 0, int(index) & 0xFFFFFFFFFFFFFFFF, int(stream)]
        return np.random.Generator(np.random.Philox(key=self.seed, counter=counter))

    def normal(self, stream: int, index: int, shape) -> np.ndarray:
        return self.generator(stream, index).standard_normal(shape, dtype=np.float64)

    def normal_grid(self, stream: int, index: int, shape) -> LatentGrid:
        return LatentGrid(self.normal(stream, index, shape))
