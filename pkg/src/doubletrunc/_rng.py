"""Seeded substreams: stream ``(seed, *key)`` is independent of execution order."""
import numpy as np


def as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if seed is None:
        raise ValueError("a seed is required for reproducible resampling")
    return np.random.SeedSequence(int(seed))


def child(seed, *key) -> np.random.SeedSequence:
    ss = as_seed_sequence(seed)
    return np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + tuple(int(k) for k in key))


def substream(seed, *key) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(child(seed, *key)))


def describe(seed):
    """JSON-friendly form of a seed."""
    if isinstance(seed, np.random.SeedSequence):
        if not seed.spawn_key:
            return int(seed.entropy)
        return {"entropy": int(seed.entropy), "spawn_key": [int(k) for k in seed.spawn_key]}
    return int(seed)
