"""Per-walker random streams: counter-based, derived from one master seed.

Each walker owns a Philox stream keyed by (seed, walker index), so its draw
sequence does not depend on how walkers are scheduled or batched.
"""

from __future__ import annotations

import numpy as np

__all__ = ["walker_streams", "normal_block", "uniform_block", "uniform_scalars"]


def walker_streams(seed: int, count: int, start_id: int = 0) -> list[np.random.Generator]:
    return [
        np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(start_id + i,))))
        for i in range(count)
    ]


def normal_block(streams, n: int) -> np.ndarray:
    """(n, walkers) standard normals; column w is the next n draws of stream w."""
    return np.stack([g.standard_normal(n) for g in streams], axis=1)


def uniform_block(streams, n: int, high: float) -> np.ndarray:
    return np.stack([g.uniform(0.0, high, n) for g in streams], axis=1)


def uniform_scalars(streams, high: float) -> np.ndarray:
    return np.array([g.uniform(0.0, high) for g in streams])
