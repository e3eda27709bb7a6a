"""Deterministic random-number streams.

Every source of randomness in the package is drawn from an ``RngStream``,
a (seed, stream id) pair mapped through ``numpy``'s ``SeedSequence`` so
that the same pair yields the same draw sequence on every platform.
Stream ids are allocated by the caller; the conventions used by the
training loop are documented in :mod:`iad.iterate`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by (seed, stream id)."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        """Instantiate the stream's generator. Repeated calls restart it."""
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(seq))


def as_generator(rng: RngStream | np.random.Generator) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng
