"""Deterministic random stream derivation.

Every random quantity in the package is drawn from a Philox counter-based
generator whose stream is derived from a user seed plus a tuple of integer
indices (cache id, block id, experiment cell, bootstrap round, ...).  Streams
derived from distinct index tuples are statistically independent, and the
derivation is stable across processes, so serial and parallel execution of
the same plan consume identical randomness.
"""

from __future__ import annotations

import numpy as np

# Rows drawn per block when a sampler fills a large cache.  Fixed so that the
# block boundaries (and hence the exact output) never depend on how the work
# is scheduled.
BLOCK_ROWS = 65536


def derived_rng(seed: int, *indices: int) -> np.random.Generator:
    """Generator for the stream identified by (seed, *indices)."""
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(i) for i in indices))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *indices: int) -> int:
    """Stable integer sub-seed for (seed, *indices), for APIs that take ints."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(i) for i in indices))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def block_count(total_rows: int) -> int:
    return (int(total_rows) + BLOCK_ROWS - 1) // BLOCK_ROWS


def block_slices(total_rows: int):
    """Yield (block_index, start, stop) covering range(total_rows)."""
    total_rows = int(total_rows)
    for b in range(block_count(total_rows)):
        start = b * BLOCK_ROWS
        stop = min(start + BLOCK_ROWS, total_rows)
        yield b, start, stop
