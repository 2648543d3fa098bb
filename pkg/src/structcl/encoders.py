"""Semantic perceptrons over S and X, and the weight-shared two-layer GCN."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import autodiff as ad
from .autodiff import Tensor
from .errors import DimensionError


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, name=None) -> Tensor:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, size=(fan_in, fan_out)), requires_grad=True, name=name)


def zeros(cols: int, name=None) -> Tensor:
    return Tensor(np.zeros((1, cols)), requires_grad=True, name=name)


@dataclass
class Perceptron:
    """Two-layer perceptron with a hidden ReLU and a linear output."""

    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor

    @classmethod
    def init(cls, rng, n_in, hidden, n_out, prefix=""):
        return cls(glorot(rng, n_in, hidden, prefix + "w1"), zeros(hidden, prefix + "b1"),
                   glorot(rng, hidden, n_out, prefix + "w2"), zeros(n_out, prefix + "b2"))

    @property
    def n_in(self):
        return self.w1.rows

    def params(self):
        return [self.w1, self.b1, self.w2, self.b2]

    def __call__(self, x):
        if x.shape[1] != self.n_in:
            raise DimensionError(f"perceptron expects width {self.n_in}, got {x.shape[1]}")
        first = ad.sparse_matmul(x, self.w1) if _is_const(x) else ad.matmul(x, self.w1)
        h = ad.relu(ad.add(first, self.b1))
        return ad.add(ad.matmul(h, self.w2), self.b2)


def _is_const(x):
    return sp.issparse(x) or isinstance(x, np.ndarray)


@dataclass
class SssParams:
    f_s: Perceptron
    f_x: Perceptron

    @classmethod
    def init(cls, rng, n_nodes, n_features, hidden=128, d=32):
        return cls(Perceptron.init(rng, n_nodes, hidden, d, "sss.s."),
                   Perceptron.init(rng, n_features, hidden, d, "sss.x."))

    def params(self):
        return self.f_s.params() + self.f_x.params()


@dataclass
class GcnParams:
    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor

    @classmethod
    def init(cls, rng, n_in, hidden=128, n_out=64, prefix="gcn."):
        return cls(glorot(rng, n_in, hidden, prefix + "w1"), zeros(hidden, prefix + "b1"),
                   glorot(rng, hidden, n_out, prefix + "w2"), zeros(n_out, prefix + "b2"))

    def params(self):
        return [self.w1, self.b1, self.w2, self.b2]


def normalize_adjacency(adj) -> sp.csr_matrix:
    """``D^-1/2 (A + I) D^-1/2`` with degrees taken from ``A + I``."""
    a = sp.csr_matrix(adj, dtype=np.float64)
    n = a.shape[0]
    a_hat = a + sp.identity(n, format="csr")
    deg = np.asarray(a_hat.sum(axis=1)).ravel()
    inv = sp.diags(1.0 / np.sqrt(deg))
    out = (inv @ a_hat @ inv).tocsr()
    out.sort_indices()
    return out


def sss_forward(p: SssParams, s, x):
    """Returns ``(S', X')``; ``s`` is usually sparse, ``x`` dense or a Tensor."""
    if s.shape[1] != p.f_s.n_in:
        raise DimensionError(f"SSS: S has width {s.shape[1]}, f_S expects {p.f_s.n_in}")
    if x.shape[1] != p.f_x.n_in:
        raise DimensionError(f"SSS: X has width {x.shape[1]}, f_X expects {p.f_x.n_in}")
    if s.shape[0] != x.shape[0]:
        raise DimensionError(f"SSS: S has {s.shape[0]} rows, X has {x.shape[0]}")
    return p.f_s(s), p.f_x(x)


def aggregate(s_sem: Tensor, x_sem: Tensor) -> Tensor:
    return ad.concat_cols(s_sem, x_sem)


def gcn_forward(p: GcnParams, norm_adj, h0: Tensor) -> Tensor:
    if h0.cols != p.w1.rows:
        raise DimensionError(f"GCN: input width {h0.cols}, layer 1 expects {p.w1.rows}")
    if norm_adj.shape[0] != h0.rows:
        raise DimensionError(f"GCN: adjacency {norm_adj.shape} for {h0.rows} nodes")
    h = ad.relu(ad.add(ad.sparse_matmul(norm_adj, ad.matmul(h0, p.w1)), p.b1))
    return ad.add(ad.sparse_matmul(norm_adj, ad.matmul(h, p.w2)), p.b2)


def encode_views(sss: SssParams | None, gcn: GcnParams, s, x, norm_adj, norm_high_adj,
                 h0: Tensor | None = None):
    """One semantic pass feeds both views through the shared GCN.

    ``h0`` short-circuits the semantic layer (used by the no-SSS ablation).
    """
    if h0 is None:
        h0 = aggregate(*sss_forward(sss, s, x))
    return gcn_forward(gcn, norm_adj, h0), gcn_forward(gcn, norm_high_adj, h0)
