"""Deterministic derivation of random number streams.

Every stochastic component of a run draws from a numpy Generator seeded by
the run seed plus a structured key (role tag, second index, generation,
vehicle ids, ...).  Streams for unrelated purposes are therefore disjoint,
and no result can depend on the order in which streams are consumed.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_words(parts: tuple[int | str, ...]) -> list[int]:
    words: list[int] = []
    for part in parts:
        if isinstance(part, str):
            words.append(zlib.crc32(part.encode("utf-8")))
        else:
            value = int(part)
            if value < 0:
                raise ValueError(f"rng key parts must be non-negative, got {value}")
            words.append(value)
    return words


def derive_rng(seed: int, *key: int | str) -> np.random.Generator:
    """Return a Generator for the stream identified by (seed, *key).

    String key parts are hashed with CRC32 so role tags stay stable across
    interpreter runs; integer parts (seconds, generations, ids) are used
    verbatim and must be non-negative.
    """
    return np.random.default_rng(_key_words((seed, *key)))
