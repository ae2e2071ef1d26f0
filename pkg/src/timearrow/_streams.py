"""Counter-based random substreams.

Every sampled object (a Langevin path, a multinomial draw, a trial block)
gets its own Philox stream keyed by (master_seed, lane:index). Results are
therefore independent of evaluation order, chunking, and worker count.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox

from .errors import ValidationError

LANE_LANGEVIN_FORWARD = 0
LANE_LANGEVIN_REVERSE = 1
LANE_CLASSICAL = 2
LANE_QUANTUM = 3
LANE_FIDELITY_CURVE = 4

_INDEX_BITS = 56
MAX_STREAM_INDEX = 1 << _INDEX_BITS


def check_master_seed(seed: int) -> int:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise ValidationError(f"master seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValidationError("master seed must fit in an unsigned 64-bit integer")
    return seed


def substream(master_seed: int, lane: int, index: int = 0) -> Generator:
    """Generator for substream `index` of `lane` under `master_seed`."""
    seed = check_master_seed(master_seed)
    if not 0 <= index < MAX_STREAM_INDEX:
        raise ValidationError(f"stream index out of range: {index}")
    if not 0 <= lane < 256:
        raise ValidationError(f"lane out of range: {lane}")
    key = np.array([seed, (lane << _INDEX_BITS) + index], dtype=np.uint64)
    return Generator(Philox(key=key))
