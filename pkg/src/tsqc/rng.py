"""Seedable, splittable random streams.

A stream is addressed by a root seed and a path of integer split indices. The
path becomes numpy's ``SeedSequence.spawn_key``, so stream ``(seed, (3, 7))``
is the same generator no matter which process or worker builds it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GENERATOR_ID = "numpy.PCG64/SeedSequence(entropy=seed, spawn_key=path)"

_MAX_SEED = 2**64


@dataclass(frozen=True)
class SeedTree:
    seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.seed) < _MAX_SEED:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "path", tuple(int(i) for i in self.path))

    def split(self, index: int) -> SeedTree:
        return SeedTree(self.seed, self.path + (int(index),))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self.path)))

    def derive_seed(self) -> int:
        """A 64-bit integer seed for this node, for APIs that take plain ints."""
        state = np.random.SeedSequence(self.seed, spawn_key=self.path).generate_state(2, dtype=np.uint32)
        return int(state[0]) | (int(state[1]) << 32)
