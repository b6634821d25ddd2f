"""Seeded random streams.

Every random draw in the package goes through :func:`stream`, which keys a
Philox counter-based generator on ``(seed, tag)``. The tag is hashed with
CRC-32 so the mapping is stable across interpreters and platforms. Gaussian
variates come from numpy's ziggurat transform of the Philox output.
"""

import zlib

import numpy as np


def _tag_key(tag):
    return zlib.crc32(tag.encode("utf-8"))


def stream(seed, tag):
    """Return an independent ``numpy.random.Generator`` for ``(seed, tag)``."""
    if seed is None:
        raise ValueError("an explicit integer seed is required")
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(_tag_key(tag),))
    return np.random.Generator(np.random.Philox(ss))


def gaussian(seed, tag, shape):
    return stream(seed, tag).standard_normal(shape)
