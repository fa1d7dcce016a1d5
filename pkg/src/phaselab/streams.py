"""Deterministic, splittable random streams.

Each Monte Carlo trial gets its own Philox counter-based stream keyed by
``(master_seed, stream_index)``.  Streams with distinct indices are
statistically independent, and the same key always replays the same
sequence, regardless of how many other streams were consumed in between.
That makes parallel trial execution reproducible by construction.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = ["RandomStream", "derive_stream"]


@dataclass
class RandomStream:
    """A seeded stream of uniform and standard-normal draws."""

    master_seed: int
    stream_index: int
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.master_seed < 0 or self.stream_index < 0:
            raise ValueError("master_seed and stream_index must be non-negative")
        key = np.array(
            [self.master_seed & 0xFFFFFFFFFFFFFFFF, self.stream_index],
            dtype=np.uint64,
        )
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def uniform(self, size=None):
        """Uniform draws on [0, 1)."""
        return self._gen.random(size)

    def normal(self, size=None):
        """Standard-normal draws."""
        return self._gen.standard_normal(size)

    @property
    def generator(self) -> np.random.Generator:
        return self._gen


def derive_stream(master_seed: int, stream_index: int) -> RandomStream:
    """Stream for trial ``stream_index`` under ``master_seed``."""
    return RandomStream(master_seed, stream_index)
