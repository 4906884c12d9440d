"""Seed derivation.

A replica seed is derived from ``(master, index)`` by one SplitMix64 step::

    z = (master + 0x9E3779B97F4A7C15 * (index + 1)) mod 2**64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2**64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) mod 2**64
    z =   z ^ (z >> 31)

The derived 64-bit integer seeds ``numpy.random.SFC64`` (through numpy's
``SeedSequence``).  Replica ``r`` of an ensemble uses ``derive(master, r)``;
inside a replica the initial configuration uses ``derive(replica_seed, 0)`` and
the dynamics ``derive(replica_seed, 1)``.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive(master: int, index: int) -> int:
    if index < 0:
        raise ValueError("index must be non-negative")
    return splitmix64((master & MASK64) + GOLDEN * (index + 1))


def bit_generator(seed: int) -> np.random.SFC64:
    return np.random.SFC64(seed & MASK64)
