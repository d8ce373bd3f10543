"""Reproducible random substreams keyed by (seed, *path)."""

from __future__ import annotations

import numpy as np


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for ``keys`` under ``seed``.

    Streams for different key paths are statistically independent and do not
    depend on the order in which they are created.
    """
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))
