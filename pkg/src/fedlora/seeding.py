"""Derivation of independent, replayable RNG streams from one master seed.

Every random draw in a simulation comes from a stream addressed by a
(kind, *path) tuple, e.g. (NOISE, client_id, round). Streams are derived
with numpy's SeedSequence spawn-key mechanism, so the same master seed
always yields bitwise-identical draws regardless of call order.
"""

from __future__ import annotations

from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    """Top-level stream families used by the simulator."""

    DATA = 0
    INIT = 1
    NOISE = 2
    POLICY = 3


def stream(master_seed: int, kind: Stream, *path: int) -> np.random.Generator:
    """Return a generator for the stream addressed by (kind, *path)."""
    key = (int(kind),) + tuple(int(p) for p in path)
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key))
