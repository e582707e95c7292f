"""Counter-based random streams.

Every (seed, scenario, domain, split, variable) key gets its own Philox stream,
seeded through a SeedSequence whose entropy is the seed plus the CRC32 of each key
part. Adding a variable or changing one split's size never perturbs other columns.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_word(part: str | int) -> int:
    return zlib.crc32(str(part).encode("utf-8"))


def stream(seed: int, *keys: str | int) -> np.random.Generator:
    """Independent generator for one named column of one batch."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, *(_key_word(k) for k in keys)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def replicate_seed(seed: int, replicate: int) -> int:
    """Seed for replicate ``r`` of an experiment run with ``seed``."""
    return int(np.random.SeedSequence([int(seed), int(replicate)]).generate_state(1, dtype=np.uint64)[0])
