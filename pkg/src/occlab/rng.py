"""Reproducible random streams indexed by (master_seed, replica_index).

Every replica owns an independent ``SeedSequence`` child, so results do not
depend on how replicas are batched or which worker computes them.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from .errors import ConfigurationError

T = TypeVar("T")

_U64 = 2**64


@dataclass(frozen=True)
class RngStreamSpec:
    master_seed: int
    replica_index: int = 0
    substream: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < _U64:
            raise ConfigurationError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if int(self.replica_index) < 0:
            raise ConfigurationError("replica_index must be nonnegative")

    def seed_sequence(self) -> np.random.SeedSequence:
        key = (int(self.replica_index),) + tuple(int(k) for k in self.substream)
        return np.random.SeedSequence(int(self.master_seed), spawn_key=key)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.SFC64(self.seed_sequence()))

    def child(self, k: int) -> "RngStreamSpec":
        """Independent sub-stream, used when one replica needs a second source."""
        return RngStreamSpec(self.master_seed, self.replica_index, self.substream + (int(k),))


def streams(master_seed: int, replicas: Iterable[int]) -> list[RngStreamSpec]:
    return [RngStreamSpec(master_seed, int(r)) for r in replicas]


def batch_ranges(n: int, batch: int) -> list[range]:
    return [range(s, min(s + batch, n)) for s in range(0, n, batch)]


def parallel_map(fn: Callable[[T], object], items: Sequence[T], threads: int = 1) -> list:
    """Order-preserving map; ``threads > 1`` uses a thread pool.

    numpy's generators release the GIL while filling arrays, so threads give
    real speedup for simulation-heavy callables.
    """
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
