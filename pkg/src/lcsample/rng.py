"""Counter-based, splittable random streams.

Every sampler takes an explicit ``numpy.random.Generator``. Streams are
Philox generators keyed by ``(seed, *path)`` so that sweep point ``i`` or
replica block ``j`` always sees the same numbers regardless of scheduling.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for ``seed`` and the integer spawn path."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def split(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    """``n`` child streams derived from ``rng`` (consumes one draw)."""
    ss = np.random.SeedSequence(int(rng.integers(0, 2**63)))
    return [np.random.Generator(np.random.Philox(child)) for child in ss.spawn(n)]
