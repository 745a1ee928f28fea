"""Named random substreams derived from a single integer seed."""

import zlib

import numpy as np


def substream(seed: int, name: str) -> int:
    """Deterministic 32-bit seed for the stream ``name`` under ``seed``."""
    key = zlib.crc32(name.encode("utf-8"))
    return int(np.random.SeedSequence([int(seed), key]).generate_state(1)[0])


def rng(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(substream(seed, name))
