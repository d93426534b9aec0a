"""Small shared helpers: wrapping, deterministic seeding, worker pools."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

THREADS_ENV = "TORUSLOCK_THREADS"


def wrap01(x):
    """Reduce to the fundamental domain [0, 1). Works on scalars and arrays."""
    return x - np.floor(x)


def circle_dist(a, b):
    """Distance on the circle R/Z."""
    d = np.abs(wrap01(a) - wrap01(b))
    return np.minimum(d, 1.0 - d)


def stage_seed(seed: int, stage: str) -> np.random.SeedSequence:
    """Derive a per-stage seed deterministically from the run seed.

    The derivation is fixed: spawn key = (seed, crc of stage name), so the
    same (seed, stage) pair always yields the same stream regardless of the
    order in which stages run.
    """
    tag = np.frombuffer(stage.encode("utf8"), dtype=np.uint8)
    return np.random.SeedSequence(entropy=int(seed) & (2**63 - 1),
                                  spawn_key=tuple(int(t) for t in tag))


def stage_rng(seed: int, stage: str) -> np.random.Generator:
    return np.random.default_rng(stage_seed(seed, stage))


def n_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def pool_map(fn, items):
    """Map preserving order; threads only if TORUSLOCK_THREADS > 1."""
    items = list(items)
    w = n_workers()
    if w <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, items))
