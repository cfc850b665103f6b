"""Reproducible, partitionable Gaussian draws.

Draws are produced in fixed-size blocks. Block ``b`` of a stream with seed
``s`` comes from a Philox generator keyed by ``(s, b)``, so any split of
the block range over workers yields bitwise-identical draws.
"""
from concurrent.futures import ThreadPoolExecutor

import numpy as np

__all__ = ["BLOCK", "block_rng", "block_ranges", "normal_block", "map_blocks"]

BLOCK = 1 << 16


def block_rng(seed, index):
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def block_ranges(reps, block=BLOCK):
    """``(index, start, stop)`` for every block covering ``range(reps)``."""
    return [(b, s, min(s + block, reps)) for b, s in enumerate(range(0, reps, block))]


def normal_block(seed, index, size, dim):
    """Standard normal draws of shape ``(dim, size)`` for one block."""
    return block_rng(seed, index).standard_normal((size, dim)).T


def map_blocks(func, reps, workers=1, block=BLOCK):
    """Apply ``func(index, start, stop)`` to every block, in block order."""
    ranges = block_ranges(reps, block)
    if workers is None or workers <= 1:
        return [func(*r) for r in ranges]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda r: func(*r), ranges))
