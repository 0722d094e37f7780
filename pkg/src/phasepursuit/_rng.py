"""Seeded random streams.

Every stochastic object in the package draws from its own counter-based
(Philox) stream keyed by an explicit 64-bit seed, so independently seeded
artifacts (ensembles, noise, initial points, Monte-Carlo trials) never
alias each other and every result is reproducible from seeds alone.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed: int) -> np.random.Generator:
    """Independent generator for the given 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=int(seed) & _MASK64))


def derive_seed(base_seed: int, *labels) -> int:
    """Stable 64-bit seed for (base_seed, labels).

    Uses blake2b over the repr of the label tuple, so the mapping is stable
    across processes and Python versions (unlike builtin hash()).
    """
    material = repr((int(base_seed) & _MASK64,) + tuple(labels)).encode()
    digest = hashlib.blake2b(material, digest_size=8).digest()
    return int.from_bytes(digest, "little")
