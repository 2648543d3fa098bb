"""Planted-partition graphs used as fixtures with known communities."""
from __future__ import annotations

import numpy as np

from . import rng
from .errors import ConfigError
from .graph import DataGraph


def planted_partition(blocks: int, size: int, p_in: float, p_out: float, seed: int,
                      attributes: bool = True) -> DataGraph:
    """``blocks`` equal blocks of ``size`` nodes; one-hot block attributes."""
    if not (0.0 <= p_out < p_in <= 1.0):
        raise ConfigError(f"need 0 <= p_out < p_in <= 1, got p_in={p_in}, p_out={p_out}")
    if blocks < 1 or size < 1:
        raise ConfigError("blocks and size must be positive")
    n = blocks * size
    labels = np.repeat(np.arange(blocks), size)
    gen = rng.stream(seed, "synth")
    iu, ju = np.triu_indices(n, k=1)
    same = labels[iu] == labels[ju]
    prob = np.where(same, p_in, p_out)
    keep = gen.random(iu.shape[0]) < prob
    edges = np.stack([iu[keep], ju[keep]], axis=1)
    attrs = np.eye(blocks)[labels] if attributes else None
    return DataGraph.from_edges(n, edges, attrs, labels)


def expected_edges(blocks: int, size: int, p_in: float, p_out: float) -> tuple[float, float]:
    """Mean and standard deviation of the edge count."""
    within = blocks * size * (size - 1) // 2
    n = blocks * size
    cross = n * (n - 1) // 2 - within
    mean = within * p_in + cross * p_out
    var = within * p_in * (1 - p_in) + cross * p_out * (1 - p_out)
    return mean, float(np.sqrt(var))
