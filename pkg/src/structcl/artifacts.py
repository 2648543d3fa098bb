"""Run-directory files.

config.cfg          resolved configuration
loss_history.csv    ``epoch,loss``
encoder.ckpt        encoder weights (binary checkpoint)
head.ckpt           detection head weights
embeddings.txt      header ``N L`` then N rows of L floats
predictions.txt     ``node label`` per line
metrics.txt         flat ``key = value``
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import DimensionError, ParseError


def write_loss_history(path, history) -> None:
    with open(path, "w") as fh:
        fh.write("epoch,loss\n")
        for i, v in enumerate(history, 1):
            fh.write(f"{i},{v:.17g}\n")


def read_loss_history(path) -> list[float]:
    lines = Path(path).read_text().splitlines()[1:]
    return [float(l.split(",")[1]) for l in lines if l.strip()]


def write_embeddings(path, z: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write(f"{z.shape[0]} {z.shape[1]}\n")
        np.savetxt(fh, z, fmt="%.17g")


def read_embeddings(path) -> np.ndarray:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ParseError(path, 1, "embedding header must be 'N L'")
        n, width = int(header[0]), int(header[1])
        z = np.loadtxt(fh, dtype=np.float64, ndmin=2)
    if n == 0:
        return np.zeros((0, width))
    if z.shape != (n, width):
        raise DimensionError(f"{path}: header says {n}x{width}, data is {z.shape}")
    return z


def write_predictions(path, pred: np.ndarray) -> None:
    with open(path, "w") as fh:
        for i, p in enumerate(pred):
            fh.write(f"{i} {int(p)}\n")


def read_predictions(path) -> np.ndarray:
    """Accepts ``node label`` rows or bare one-label-per-line files."""
    path = Path(path)
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        try:
            rows.append([int(t) for t in parts[:2]])
        except ValueError:
            raise ParseError(path, lineno, "expected integers") from None
    if not rows:
        return np.zeros(0, dtype=np.int64)
    if all(len(r) == 1 for r in rows):
        return np.array([r[0] for r in rows], dtype=np.int64)
    if any(len(r) != 2 for r in rows):
        raise ParseError(path, 1, "mixed row formats")
    arr = np.array(rows, dtype=np.int64)
    out = np.full(arr[:, 0].max() + 1, -1, dtype=np.int64)
    out[arr[:, 0]] = arr[:, 1]
    if (out < 0).any():
        raise ParseError(path, 1, "node ids are not contiguous from 0")
    return out


def write_metrics(path, values: dict) -> None:
    with open(path, "w") as fh:
        for k, v in values.items():
            if isinstance(v, float):
                v = f"{v:.17g}"
            fh.write(f"{k} = {v}\n")


def read_metrics(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = (t.strip() for t in line.split("=", 1))
            out[k] = v
    return out
