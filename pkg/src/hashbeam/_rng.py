"""Seed handling shared by the simulators.

Every Monte Carlo loop in the package walks trials in fixed-size blocks.
Block ``b`` of a run seeded with ``seed`` draws from a generator keyed on
``(seed, b, purpose)``, so results do not depend on how blocks are scheduled.
"""

from __future__ import annotations

from typing import Iterator, Sequence, Union

import numpy as np

Seed = Union[int, Sequence[int]]

BLOCK_SIZE = 1024

# purpose tags; one independent stream per kind of randomness
CHANNEL = 0
NOISE = 1
CODEBOOK = 2
PAIR = 3


def _entropy(seed: Seed) -> list[int]:
    if isinstance(seed, (int, np.integer)):
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        return [int(seed)]
    out = [int(s) for s in seed]
    if not out or any(s < 0 for s in out):
        raise ValueError(f"seed must be a non-empty tuple of non-negative ints, got {seed!r}")
    return out


def block_rng(seed: Seed, block: int, purpose: int) -> np.random.Generator:
    ss = np.random.SeedSequence(_entropy(seed), spawn_key=(block, purpose))
    return np.random.default_rng(ss)


def derive_seed(seed: Seed, *keys: int) -> int:
    """Deterministic 63-bit integer seed for a child task."""
    ss = np.random.SeedSequence(_entropy(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def blocks(trials: int) -> Iterator[tuple[int, int]]:
    """Yield ``(block_index, block_len)`` covering ``trials`` trials."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    for b, start in enumerate(range(0, trials, BLOCK_SIZE)):
        yield b, min(BLOCK_SIZE, trials - start)
