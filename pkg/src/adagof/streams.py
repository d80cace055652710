"""Deterministic random-stream derivation.

Every Monte Carlo replicate in the package draws from its own generator,
derived from a ``(seed, label, replicate)`` triple.  Streams are therefore
independent of scheduling: any partition of replicates across workers
reproduces the same per-replicate draws.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _label_words(label: str) -> list[int]:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return [int.from_bytes(digest[i : i + 8], "little") for i in range(0, 32, 8)]


def derive_stream(seed: int, label: str, replicate: int) -> np.random.Generator:
    """Return the generator owned by one replicate of one labelled batch.

    Mixing function: the label is hashed with SHA-256 into four 64-bit words
    and the triple ``(seed, words..., replicate)`` seeds a
    ``numpy.random.SeedSequence``.  Identical triples give identical streams
    on every platform and worker count; distinct triples give independent
    streams.
    """
    entropy = [int(seed) & _MASK64, *_label_words(label), int(replicate) & _MASK64]
    return np.random.default_rng(np.random.SeedSequence(entropy))
