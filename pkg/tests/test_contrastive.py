import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from structcl.autodiff import Tensor
from structcl.contrastive import (
    PairContext, node_loss, normalize_embeddings, per_node_losses, total_loss,
)
from structcl.errors import ConfigError, DimensionError

from gradcheck import full_loss_gradient_errors
from oracles import contrastive_loss_loops


def random_context(n, p, seed, tau=1.0):
    rng = np.random.default_rng(seed)
    m = np.triu(rng.random((n, n)) < p, 1)
    return PairContext(sp.csr_matrix((m | m.T).astype(float)), tau)


def neighbor_sets(ctx):
    return [set(ctx.neighbors(i).tolist()) for i in range(ctx.n_nodes)]


def test_normalize_embeddings():
    assert np.allclose(normalize_embeddings(np.array([[3.0, 4.0]])), [[0.6, 0.8]])
    u = np.array([[0.0, 1.0]])
    assert np.array_equal(normalize_embeddings(u), u)
    z = normalize_embeddings(np.random.default_rng(0).normal(size=(20, 5)))
    assert np.allclose(np.einsum("ij,ij->i", z, z), 1.0, atol=1e-9)


def test_tau_must_be_positive():
    with pytest.raises(ConfigError):
        PairContext(sp.csr_matrix((3, 3)), 0.0)


def test_context_drops_diagonal():
    ctx = PairContext(sp.csr_matrix(np.ones((3, 3))), 1.0)
    assert 0 not in ctx.neighbors(0)
    assert ctx.positive_count(0) == 5


def test_positive_count():
    ctx = PairContext(sp.csr_matrix([[0, 1, 1], [1, 0, 0], [1, 0, 0]]), 1.0)
    assert ctx.positive_count(0) == 5
    assert ctx.positive_count(1) == 3


def test_node_loss_matches_loop_oracle_4_nodes():
    rng = np.random.default_rng(4)
    ctx = PairContext(sp.csr_matrix([[0, 1, 0, 0], [1, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 0]]), 1.0)
    z1, z2 = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))
    mean, l1, l2 = contrastive_loss_loops(z1.tolist(), z2.tolist(), neighbor_sets(ctx), 1.0)
    a, b = normalize_embeddings(z1), normalize_embeddings(z2)
    for i in range(4):
        assert abs(node_loss(i, 1, a, b, ctx) - l1[i]) < 1e-12
        assert abs(node_loss(i, 2, a, b, ctx) - l2[i]) < 1e-12
        assert node_loss(i, 1, a, b, ctx) > 0
    total = total_loss(Tensor(z1), Tensor(z2), ctx).item()
    assert abs(total - mean) < 1e-12
    eight = [node_loss(i, v, a, b, ctx) for i in range(4) for v in (1, 2)]
    assert abs(total - np.mean(eight)) < 1e-12


def test_identical_views_symmetric_losses():
    ctx = random_context(10, 0.3, 1)
    z = np.random.default_rng(1).normal(size=(10, 4))
    l1, l2 = per_node_losses(Tensor(z), Tensor(z.copy()), ctx)
    assert np.allclose(l1.data, l2.data, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 32), st.integers(1, 8), st.floats(0.0, 0.7), st.floats(0.2, 5.0),
       st.integers(0, 10_000))
def test_vectorized_equals_loops(n, width, p, tau, seed):
    ctx = random_context(n, p, seed, tau)
    rng = np.random.default_rng(seed)
    z1, z2 = rng.normal(size=(n, width)), rng.normal(size=(n, width))
    mean, _, _ = contrastive_loss_loops(z1.tolist(), z2.tolist(), neighbor_sets(ctx), tau)
    assert abs(total_loss(Tensor(z1), Tensor(z2), ctx).item() - mean) < 1e-10


def test_rotation_invariance():
    ctx = random_context(12, 0.3, 2)
    rng = np.random.default_rng(2)
    z1, z2 = rng.normal(size=(12, 5)), rng.normal(size=(12, 5))
    q, _ = np.linalg.qr(rng.normal(size=(5, 5)))
    a = total_loss(Tensor(z1), Tensor(z2), ctx).item()
    b = total_loss(Tensor(z1 @ q), Tensor(z2 @ q), ctx).item()
    assert abs(a - b) < 1e-12


def _loss_from_sims(s11, s12, s22, nb, tau=1.0):
    """Per-node loss written directly on similarity matrices (anchor view 1 only)."""
    n = s11.shape[0]
    out = 0.0
    for i in range(n):
        pos = sum(np.exp(s11[i, j] / tau) + np.exp(s12[i, j] / tau) for j in nb[i])
        neg = sum(np.exp(s11[i, j] / tau) + np.exp(s12[i, j] / tau)
                  for j in range(n) if j not in nb[i] and j != i)
        selfp = np.exp(s12[i, i] / tau)
        out += -np.log(((pos + selfp) / (2 * len(nb[i]) + 1)) / (neg + pos + selfp))
    return out


def test_monotone_in_pair_similarity():
    rng = np.random.default_rng(3)
    n = 6
    ctx = random_context(n, 0.4, 5)
    nb = neighbor_sets(ctx)
    s11 = rng.uniform(-1, 1, (n, n))
    s12 = rng.uniform(-1, 1, (n, n))
    s22 = rng.uniform(-1, 1, (n, n))
    base = _loss_from_sims(s11, s12, s22, nb)
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            bumped = s12.copy()
            if j in nb[i]:
                bumped[i, j] += 0.3
                assert _loss_from_sims(s11, bumped, s22, nb) <= base + 1e-12
            else:
                bumped[i, j] -= 0.3
                assert _loss_from_sims(s11, bumped, s22, nb) <= base + 1e-12


def test_isolated_anchor_single_positive():
    ctx = PairContext(sp.csr_matrix([[0, 0, 0], [0, 0, 1], [0, 1, 0]]), 1.0)
    assert ctx.positive_count(0) == 1
    rng = np.random.default_rng(0)
    a = normalize_embeddings(rng.normal(size=(3, 2)))
    b = normalize_embeddings(rng.normal(size=(3, 2)))
    selfp = np.exp(a[0] @ b[0])
    den = selfp + np.exp(a[0] @ a[1]) + np.exp(a[0] @ a[2]) + np.exp(a[0] @ b[1]) + np.exp(a[0] @ b[2])
    assert node_loss(0, 1, a, b, ctx) == pytest.approx(-np.log(selfp / den), abs=1e-12)


def test_positive_term_count_random():
    for seed in range(10):
        ctx = random_context(15, 0.3, seed)
        for i in range(15):
            nb = ctx.neighbors(i)
            # intra neighbours + inter neighbours + the inter self pair
            assert len(nb) + len(nb) + 1 == ctx.positive_count(i)


def test_shape_checks():
    ctx = random_context(4, 0.5, 0)
    with pytest.raises(DimensionError):
        total_loss(Tensor(np.ones((4, 2))), Tensor(np.ones((4, 3))), ctx)
    with pytest.raises(DimensionError):
        total_loss(Tensor(np.ones((5, 2))), Tensor(np.ones((5, 2))), ctx)


def test_full_loss_gradients_12_nodes(two_community_12):
    errs = full_loss_gradient_errors(two_community_12)
    assert len(errs) == 12
    assert max(errs.values()) < 1e-4, errs
