"""Counter-based random streams and replica fan-out.

Every replica draws from its own Philox stream whose key is derived from
``(seed, label)`` and whose counter's high word is the replica index, so a
replica's numbers do not depend on which worker ran it or in what order.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class StreamFamily:
    seed: int
    label: str = "default"

    def child(self, label: str) -> "StreamFamily":
        return StreamFamily(self.seed, f"{self.label}/{label}")

    def generator(self, replica: int) -> np.random.Generator:
        key = [self.seed & _MASK64, zlib.crc32(self.label.encode())]
        return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, int(replica), 0]))


def _run_chunk(func, streams, start, stop, args):
    return [func(streams.generator(r), *args) for r in range(start, stop)]


def map_replicas(func, n, streams, args=(), workers=1, chunk_size=None):
    """Evaluate ``func(rng, *args)`` for replicas ``0..n-1``, in replica order.

    ``func`` must be a module-level callable when ``workers > 1``.
    """
    if workers <= 1 or n < 2:
        return _run_chunk(func, streams, 0, n, args)
    if chunk_size is None:
        chunk_size = max(1, -(-n // (8 * workers)))
    bounds = [(s, min(s + chunk_size, n)) for s in range(0, n, chunk_size)]
    out = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_chunk, func, streams, a, b, args) for a, b in bounds]
        for fut in futures:
            out.extend(fut.result())
    return out
