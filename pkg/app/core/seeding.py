"""
Seed derivation.

All randomness in the package comes from generators built here, so a
(seed, key...) pair always yields the same stream and adding a new key
never perturbs the streams of existing keys.
"""

import zlib

import numpy as np


def _key_int(key: int | str) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if key < 0:
        raise ValueError(f"seed keys must be non-negative, got {key}")
    return int(key)


def derive_rng(seed: int, *keys: int | str) -> np.random.Generator:
    """Independent generator for the stream named by `keys` under `seed`."""
    sequence = np.random.SeedSequence(
        entropy=seed & 0xFFFFFFFFFFFFFFFF,
        spawn_key=tuple(_key_int(k) for k in keys),
    )
    return np.random.Generator(np.random.PCG64(sequence))


def derive_seed(seed: int, *keys: int | str) -> int:
    """64-bit integer seed for the stream named by `keys` under `seed`."""
    sequence = np.random.SeedSequence(
        entropy=seed & 0xFFFFFFFFFFFFFFFF,
        spawn_key=tuple(_key_int(k) for k in keys),
    )
    return int(sequence.generate_state(1, dtype=np.uint64)[0])
