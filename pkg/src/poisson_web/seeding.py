"""Deterministic seed derivation.

Every random stream in the package is addressed by a tuple of integers and
derived from a master seed through :class:`numpy.random.SeedSequence`, using
the tuple as ``spawn_key``. Two different key tuples give statistically
independent streams, and a key tuple always maps to the same stream regardless
of the order in which streams are requested.

Experiment names enter the key through CRC32 so the mapping is stable across
interpreter runs (``hash()`` is salted).
"""
from __future__ import annotations

import zlib

import numpy as np


def name_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def _key(parts) -> tuple[int, ...]:
    out = []
    for p in parts:
        if isinstance(p, str):
            out.append(name_key(p))
        else:
            out.append(int(p))
    return tuple(out)


def seed_sequence(master: int, *keys: int | str) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master), spawn_key=_key(keys))


def derive_seed(master: int, *keys: int | str) -> int:
    """32-bit seed for stream ``keys`` under ``master`` (numba kernels take uint32 seeds)."""
    return int(seed_sequence(master, *keys).generate_state(1, np.uint32)[0])


def generator(master: int, *keys: int | str) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(master, *keys))


BLOCK = 1000


def blocks(n: int, master: int, *keys: int | str, block: int = BLOCK):
    """Split ``n`` replicas into fixed blocks; yield ``(start, size, uint32 seed)``.

    Block ``b`` always covers replicas ``[b * block, (b + 1) * block)`` and draws
    from stream ``(*keys, b)``, so results do not depend on execution order.
    """
    for b, start in enumerate(range(0, n, block)):
        yield start, min(block, n - start), derive_seed(master, *keys, b)
