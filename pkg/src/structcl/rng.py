"""Named random streams derived from a single integer seed.

Every consumer asks for its own stream by name so that, e.g., adding a draw
during weight initialization never shifts the train/val/test split.
"""
import zlib

import numpy as np

STREAMS = ("init", "split", "synth", "project", "detect")


def stream(seed: int, name: str) -> np.random.Generator:
    if name not in STREAMS:
        raise KeyError(f"unknown random stream {name!r}")
    # crc32 is stable across processes, unlike hash()
    key = zlib.crc32(name.encode("ascii"))
    return np.random.default_rng(np.random.SeedSequence([int(seed), key]))
