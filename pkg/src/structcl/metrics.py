"""ACC, NMI and macro-F1 for supervised community assignment."""
from __future__ import annotations

import numpy as np

from .errors import DimensionError

NMI_NORMALIZERS = ("geometric", "arithmetic", "max")


def _pair(y_true, y_pred):
    t = np.asarray(y_true, dtype=np.int64).ravel()
    p = np.asarray(y_pred, dtype=np.int64).ravel()
    if t.shape != p.shape:
        raise DimensionError(f"label vectors differ in length: {t.size} vs {p.size}")
    if t.size == 0:
        raise DimensionError("empty label vectors")
    if t.min() < 0 or p.min() < 0:
        raise DimensionError("labels must be non-negative")
    return t, p


def accuracy(y_true, y_pred) -> float:
    t, p = _pair(y_true, y_pred)
    return float(np.mean(t == p))


def contingency(y_true, y_pred) -> np.ndarray:
    t, p = _pair(y_true, y_pred)
    _, ti = np.unique(t, return_inverse=True)
    _, pi = np.unique(p, return_inverse=True)
    table = np.zeros((ti.max() + 1, pi.max() + 1), dtype=np.int64)
    np.add.at(table, (ti, pi), 1)
    return table


def _entropy(counts):
    q = counts[counts > 0] / counts.sum()
    return float(-(q * np.log(q)).sum())


def nmi(y_true, y_pred, normalizer: str = "geometric") -> float:
    if normalizer not in NMI_NORMALIZERS:
        raise ValueError(f"normalizer must be one of {NMI_NORMALIZERS}")
    table = contingency(y_true, y_pred)
    n = table.sum()
    h_t = _entropy(table.sum(axis=1))
    h_p = _entropy(table.sum(axis=0))
    if h_t == 0.0 or h_p == 0.0:
        # both constant means identical partitions
        return 1.0 if h_t == h_p else 0.0
    joint = table / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0)) / (n * n)
    nz = joint > 0
    mi = float((joint[nz] * np.log(joint[nz] / outer[nz])).sum())
    if normalizer == "geometric":
        den = np.sqrt(h_t * h_p)
    elif normalizer == "arithmetic":
        den = 0.5 * (h_t + h_p)
    else:
        den = max(h_t, h_p)
    return float(min(max(mi / den, 0.0), 1.0))


def macro_f1(y_true, y_pred) -> float:
    """Unweighted mean F1 over the classes present in ``y_true``."""
    t, p = _pair(y_true, y_pred)
    scores = []
    for c in np.unique(t):
        tp = np.sum((p == c) & (t == c))
        fp = np.sum((p == c) & (t != c))
        fn = np.sum((p != c) & (t == c))
        den = 2 * tp + fp + fn
        scores.append(0.0 if tp == 0 else 2.0 * tp / den)
    return float(np.mean(scores))


def evaluate(y_true, y_pred, normalizer: str = "geometric") -> dict:
    return {"ACC": accuracy(y_true, y_pred),
            "NMI": nmi(y_true, y_pred, normalizer),
            "MF1": macro_f1(y_true, y_pred)}


def format_report(report: dict) -> str:
    return "  ".join(f"{k} {report[k]:.2f}" for k in ("ACC", "NMI", "MF1"))
