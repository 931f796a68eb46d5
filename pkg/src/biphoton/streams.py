"""Counter-based random streams.

Every stream is addressed by ``(root seed, key path)``. A key path is a tuple
of non-negative integers such as ``(point, block)``; the same address always
yields the same Philox generator, regardless of which worker asks for it or
in which order.
"""

from dataclasses import dataclass

import numpy as np

ALGORITHM = "philox4x64-10/seedsequence"

# Trials are drawn in fixed-size blocks. Each block owns a stream, so the
# outcome of trial t depends only on (seed, key, t // BLOCK_SIZE).
BLOCK_SIZE = 1 << 16

SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class Rng:
    seed: int
    key: tuple = ()

    algorithm = ALGORITHM

    def __post_init__(self):
        seed = int(self.seed)
        if not 0 <= seed <= SEED_MASK:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
        key = tuple(int(k) for k in self.key)
        if any(k < 0 for k in key):
            raise ValueError(f"stream key entries must be non-negative, got {key}")
        object.__setattr__(self, "seed", seed)
        object.__setattr__(self, "key", key)

    def child(self, *key):
        return Rng(self.seed, self.key + key)

    def generator(self):
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.Philox(ss))


def blocks(trials, block_size=BLOCK_SIZE):
    """Yield ``(block_index, start, size)`` covering ``trials`` trials."""
    for b, start in enumerate(range(0, trials, block_size)):
        yield b, start, min(block_size, trials - start)


def map_blocks(fn, items, workers=1):
    """Apply ``fn`` to each item, optionally on a thread pool.

    Results come back in input order so reductions never depend on
    scheduling.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
