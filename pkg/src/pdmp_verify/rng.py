"""Deterministic random-stream derivation for parallel ensembles.

Every trajectory owns a private counter-based (Philox) generator keyed by
``(master seed, stream index)``, so ensembles are reproducible bit for bit
regardless of how paths are chunked across workers.  Auxiliary draws (start
sampling, randomized audit functions) use separate namespaces so they never
collide with path streams.
"""
from __future__ import annotations

import numpy as np

PATH = 0
START = 1
AUDIT = 2

_MASK64 = (1 << 64) - 1
_INDEX_MASK = (1 << 56) - 1


def stream(seed: int, index: int = 0, kind: int = PATH) -> np.random.Generator:
    """Generator for stream ``index`` of namespace ``kind`` under ``seed``."""
    key = np.array(
        [seed & _MASK64, ((kind & 0xFF) << 56) | (index & _INDEX_MASK)],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))
