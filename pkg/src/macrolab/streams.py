"""Counter-based random number streams for reproducible parallel runs.

Each run owns a Philox stream keyed by its seed.  The counter space is
partitioned into fixed-size blocks, one block per chunk of simulation
steps, and within a block every (step, purpose, firm) triple has a fixed
offset.  Draws therefore depend only on (seed, step, firm) and never on
iteration order, chunk boundaries or thread count.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

# Number of simulation steps whose draws are generated in one batch.
# Part of the stream layout: changing it changes every trajectory.
CHUNK_STEPS = 256

# Draw purposes per step: price noise, wage noise, revival coin flips.
N_PURPOSES = 3

# Counter distance between consecutive chunk blocks (Philox 256-bit counter
# advances by 1 per 4 generated 64-bit words; 2**40 words is far beyond any
# block's consumption).
_BLOCK_STRIDE = 1 << 40

_INIT_TAG = 0x6D61636C  # distinct entropy tag for the initialization stream
_STEP_TAG = 0x73746570


def _philox_key(seed: int, tag: int) -> int:
    state = SeedSequence([int(seed), tag]).generate_state(2, dtype=np.uint64)
    return int(state[0]) | (int(state[1]) << 64)


def init_generator(seed: int) -> Generator:
    """Generator for run initialization draws (price jitter)."""
    return Generator(Philox(key=_philox_key(seed, _INIT_TAG)))


def chunk_generator(seed: int, chunk_index: int) -> Generator:
    """Generator positioned at the counter block of one step chunk."""
    bg = Philox(key=_philox_key(seed, _STEP_TAG))
    bg.advance(chunk_index * _BLOCK_STRIDE)
    return Generator(bg)


def chunk_draws(seed: int, chunk_index: int, n_firms: int) -> np.ndarray:
    """Uniform draws for one chunk, shaped (CHUNK_STEPS, N_PURPOSES, n_firms).

    The full block is always generated, regardless of how many steps of the
    chunk a run actually consumes, so draw positions are a pure function of
    (seed, step, purpose, firm).
    """
    g = chunk_generator(seed, chunk_index)
    return g.random((CHUNK_STEPS, N_PURPOSES, n_firms))


def step_draws(seed: int, step: int, n_firms: int) -> np.ndarray:
    """Uniform draws for a single step, shaped (N_PURPOSES, n_firms)."""
    block = chunk_draws(seed, step // CHUNK_STEPS, n_firms)
    return block[step % CHUNK_STEPS]


def derive_seeds(master_seed: int, count: int, stream: int = 0) -> list[int]:
    """Deterministic child seeds for ensembles and sweep cells.

    The same (master_seed, stream) pair always yields the same list, so
    every sweep cell can be evaluated with an identical seed list.
    """
    ss = SeedSequence([int(master_seed), 0x5EED, int(stream)])
    state = ss.generate_state(count, dtype=np.uint64)
    return [int(x) % (1 << 63) for x in state]
