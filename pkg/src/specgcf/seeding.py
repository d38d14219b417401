"""Named random sub-streams derived from one run seed."""
import zlib

import numpy as np

STREAMS = ("split", "init", "batch", "bfs")


def rng_stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for ``name``; identical (seed, name) gives identical draws."""
    return np.random.default_rng([int(seed), zlib.crc32(name.encode())])
