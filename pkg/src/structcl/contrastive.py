"""Structure contrastive loss between the original-graph view and the
high-level view.

For an anchor ``i`` in view 1 the positives are its high-level neighbours in
both views plus its own view-2 embedding; every other node (in either view,
except ``i`` itself in view 1) is a negative. The positive mass is averaged
over its ``2|N_H(i)| + 1`` terms before the ratio with the total mass.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigError, DimensionError


@dataclass(frozen=True, eq=False)
class PairContext:
    high_adj: sp.csr_matrix
    tau: float = 1.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ConfigError(f"temperature must be > 0, got {self.tau}")
        a = sp.csr_matrix(self.high_adj, dtype=np.float64)
        a.setdiag(0)
        a.eliminate_zeros()
        a.data[:] = 1.0
        a.sort_indices()
        object.__setattr__(self, "high_adj", a)

    @property
    def n_nodes(self) -> int:
        return self.high_adj.shape[0]

    @property
    def high_degree(self) -> np.ndarray:
        return np.diff(self.high_adj.indptr)

    def neighbors(self, i: int) -> np.ndarray:
        a = self.high_adj
        return a.indices[a.indptr[i]:a.indptr[i + 1]]

    def positive_count(self, i: int) -> int:
        return 2 * int(self.high_degree[i]) + 1


def normalize_embeddings(z):
    if isinstance(z, Tensor):
        return ad.row_l2_normalize(z)
    z = np.asarray(z, dtype=np.float64)
    return z / np.maximum(np.linalg.norm(z, axis=1, keepdims=True), ad.L2_EPS)


def node_loss(i: int, view: int, z1: np.ndarray, z2: np.ndarray, ctx: PairContext) -> float:
    """Loss of one anchor on already-normalized embeddings (plain numpy)."""
    if view not in (1, 2):
        raise ValueError("view must be 1 or 2")
    if view == 2:
        z1, z2 = z2, z1
    tau = ctx.tau
    intra = np.exp(z1 @ z1[i] / tau)
    inter = np.exp(z2 @ z1[i] / tau)
    nb = ctx.neighbors(i)
    in_nb = np.zeros(z1.shape[0], dtype=bool)
    in_nb[nb] = True
    pos = intra[nb].sum() + inter[nb].sum()
    self_pair = inter[i]
    not_nb = ~in_nb
    neg = inter[not_nb].sum() - self_pair + intra[not_nb].sum() - intra[i]
    ratio = ((pos + self_pair) / ctx.positive_count(i)) / (neg + pos + self_pair)
    return float(-np.log(ratio))


def _side(e_intra: Tensor, e_inter: Tensor, mask: sp.csr_matrix, log_count: np.ndarray) -> Tensor:
    """Per-anchor loss of one view as a single tape node.

    With E = e_intra, F = e_inter and M the (zero-diagonal) neighbour mask:
    num_i = sum_j M_ij (E_ij + F_ij) + F_ii, den_i = sum_{j != i} E_ij + sum_j F_ij,
    and l_i = log den_i - log num_i + log(2 k_i + 1).
    """
    E, F = e_intra.data, e_inter.data
    diag_f = np.diagonal(F).reshape(-1, 1)
    num = np.asarray(mask.multiply(E).sum(axis=1)) + np.asarray(mask.multiply(F).sum(axis=1)) + diag_f
    den = E.sum(axis=1, keepdims=True) - np.diagonal(E).reshape(-1, 1) + F.sum(axis=1, keepdims=True)
    out = np.log(den) - np.log(num) + log_count
    n = E.shape[0]
    idx = np.arange(n)
    coo = mask.tocoo()
    r, c = coo.row, coo.col

    def fn(g):
        a, b = g / den, g / num
        rows = b[r, 0]
        ge = np.repeat(a, n, axis=1)
        ge[idx, idx] = 0.0
        ge[r, c] -= rows
        gf = np.repeat(a, n, axis=1)
        gf[r, c] -= rows
        gf[idx, idx] -= b[:, 0]
        return ge, gf
    return ad._emit(out, (e_intra, e_inter), fn)


def per_node_losses(z1: Tensor, z2: Tensor, ctx: PairContext, normalize=True):
    """Nx1 tensors ``(l1, l2)`` of per-anchor losses for the two views."""
    if z1.shape != z2.shape:
        raise DimensionError(f"view shapes differ: {z1.shape} vs {z2.shape}")
    if z1.rows != ctx.n_nodes:
        raise DimensionError(f"{z1.rows} embeddings for {ctx.n_nodes} nodes")
    if normalize:
        z1, z2 = ad.row_l2_normalize(z1), ad.row_l2_normalize(z2)
    # sims lie in [-1, 1]; shifting by 1/tau keeps exp() bounded and cancels in the ratio
    shift = -1.0 / ctx.tau

    e11, e12, e22 = (ad.exp_similarity(a, b, 1.0 / ctx.tau, shift)
                     for a, b in ((z1, z1), (z1, z2), (z2, z2)))
    log_count = np.log(2.0 * ctx.high_degree + 1.0).reshape(-1, 1)
    l1 = _side(e11, e12, ctx.high_adj, log_count)
    l2 = _side(e22, ad.transpose(e12), ctx.high_adj, log_count)
    return l1, l2


def total_loss(z1: Tensor, z2: Tensor, ctx: PairContext, normalize=True) -> Tensor:
    """Mean of the per-anchor losses over both views (1x1 tensor)."""
    l1, l2 = per_node_losses(z1, z2, ctx, normalize)
    return ad.scale(ad.add(ad.total(l1), ad.total(l2)), 0.5 / z1.rows)
