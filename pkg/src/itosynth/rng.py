"""Seeded random streams.

An :class:`RngStream` is a value, not a stateful object: every call that
receives one builds a fresh ``numpy.random.Generator`` from it, so two calls
with the same stream reproduce the same draws.  Independent replicates use
``stream.spawn(i)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream: int = 0
    sub: tuple = ()

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,) + tuple(self.sub))
        return np.random.Generator(np.random.PCG64(ss))

    def spawn(self, i: int) -> "RngStream":
        """Child stream ``i``; children of distinct ``i`` are independent."""
        return RngStream(self.seed, self.stream, tuple(self.sub) + (int(i),))


RngLike = Union[RngStream, np.random.Generator, int]


def as_generator(rng: RngLike) -> np.random.Generator:
    """Return a Generator: fresh for a stream or seed, pass-through otherwise."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise TypeError(f"cannot build a generator from {type(rng).__name__}")
