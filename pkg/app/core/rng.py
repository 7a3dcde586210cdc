"""
Seeded Random Streams
One generator algorithm everywhere (numpy PCG64) so runs are reproducible and auditable.
"""

from enum import IntEnum
from typing import Sequence

import numpy as np

RNG_ALGORITHM = "numpy.random.PCG64"


class Stage(IntEnum):
    """Fixed offsets added to the global seed for each pipeline stage."""

    ORACLE = 1
    SPLIT = 2
    TRAINING = 3
    NSGA = 4
    VALIDATION = 5


def make_rng(seed: int) -> np.random.Generator:
    """Generator for a sequential stream."""
    return np.random.Generator(np.random.PCG64(seed))


def counter_rng(seed: int, counter: Sequence[int]) -> np.random.Generator:
    """
    Generator keyed by (seed, counter...).
    Streams for different counters are independent, so work keyed this way
    gives the same numbers whatever order it runs in.
    """
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(c) for c in counter))
    return np.random.Generator(np.random.PCG64(sequence))


def stage_seed(global_seed: int, stage: Stage) -> int:
    return global_seed + int(stage)
