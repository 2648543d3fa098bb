"""Slow, obviously-correct reference implementations used only by the tests.

Nothing here imports the code paths it checks.
"""
import itertools
import math

import numpy as np


def adjacency_sets(n, edges):
    adj = [set() for _ in range(n)]
    for u, v in edges:
        u, v = int(u), int(v)
        if u != v:
            adj[u].add(v)
            adj[v].add(u)
    return adj


def brute_triangles(n, edges):
    """Per-edge triangle count by enumerating all node triples."""
    adj = adjacency_sets(n, edges)
    count = {}
    for u, v in edges:
        count[(min(u, v), max(u, v))] = 0
    for a, b, c in itertools.combinations(range(n), 3):
        if b in adj[a] and c in adj[a] and c in adj[b]:
            for e in ((a, b), (a, c), (b, c)):
                count[e] += 1
    return count


def naive_core_numbers(n, edges):
    adj = adjacency_sets(n, edges)
    core = [0] * n
    k = 0
    alive = set(range(n))
    while alive:
        k += 1
        changed = True
        while changed:
            changed = False
            for u in list(alive):
                if len(adj[u] & alive) < k:
                    alive.discard(u)
                    changed = True
        for u in alive:
            core[u] = k
    return core


def naive_truss_numbers(n, edges):
    """Truss number per edge: peel k-trusses, recomputing support from scratch."""
    live = {(min(u, v), max(u, v)) for u, v in edges}
    truss = {e: 2 for e in live}
    k = 2
    while live:
        k += 1
        while True:
            adj = adjacency_sets(n, live)
            weak = [e for e in live if len(adj[e[0]] & adj[e[1]]) < k - 2]
            if not weak:
                break
            for e in weak:
                live.discard(e)
        for e in live:
            truss[e] = k
    return truss


def contrastive_loss_loops(z1, z2, high_neighbors, tau):
    """Per-node double loop over the two-view loss; returns (mean, l1, l2)."""
    n = len(z1)

    def unit(v):
        s = math.sqrt(sum(x * x for x in v))
        return [x / max(s, 1e-12) for x in v]

    a = [unit(r) for r in z1]
    b = [unit(r) for r in z2]

    def dot(u, v):
        return sum(x * y for x, y in zip(u, v))

    def anchor_loss(i, own, other):
        nb = high_neighbors[i]
        pos = 0.0
        neg = 0.0
        for j in range(n):
            intra = math.exp(dot(own[i], own[j]) / tau)
            inter = math.exp(dot(own[i], other[j]) / tau)
            if j in nb:
                pos += intra + inter
            else:
                if j != i:
                    neg += intra + inter
        self_pair = math.exp(dot(own[i], other[i]) / tau)
        k = 2 * len(nb) + 1
        return -math.log(((pos + self_pair) / k) / (neg + pos + self_pair))

    l1 = [anchor_loss(i, a, b) for i in range(n)]
    l2 = [anchor_loss(i, b, a) for i in range(n)]
    return (sum(l1) + sum(l2)) / (2 * n), l1, l2


def central_difference(f, arrays, step=1e-6):
    """Numerical gradient of scalar ``f()`` w.r.t. each array, perturbed in place."""
    grads = []
    for a in arrays:
        g = np.zeros_like(a)
        it = np.nditer(a, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = a[idx]
            a[idx] = old + step
            hi = f()
            a[idx] = old - step
            lo = f()
            a[idx] = old
            g[idx] = (hi - lo) / (2 * step)
        grads.append(g)
    return grads


def rel_error(a, b):
    a, b = np.asarray(a), np.asarray(b)
    den = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / den)


def straight_line_sss(s_dense, x, ws, wx):
    """Two perceptrons written out with explicit loops over rows."""
    def mlp(inp, w1, b1, w2, b2):
        out = []
        for row in inp:
            h = [max(0.0, sum(row[k] * w1[k][j] for k in range(len(row))) + b1[j])
                 for j in range(len(b1))]
            out.append([sum(h[k] * w2[k][j] for k in range(len(h))) + b2[j]
                        for j in range(len(b2))])
        return np.array(out)
    return mlp(s_dense, *ws), mlp(x, *wx)


def straight_line_gcn(adj_dense, h0, w1, b1, w2, b2):
    n = len(adj_dense)
    a_hat = [[adj_dense[i][j] + (1.0 if i == j else 0.0) for j in range(n)] for i in range(n)]
    deg = [sum(r) for r in a_hat]
    norm = [[a_hat[i][j] / math.sqrt(deg[i] * deg[j]) for j in range(n)] for i in range(n)]

    def prop(h, w, b, act):
        hw = [[sum(h[i][k] * w[k][j] for k in range(len(w))) for j in range(len(w[0]))] for i in range(n)]
        out = [[sum(norm[i][m] * hw[m][j] for m in range(n)) + b[j] for j in range(len(b))] for i in range(n)]
        return [[max(0.0, v) for v in r] for r in out] if act else out

    return np.array(prop(prop(h0, w1, b1, True), w2, b2, False))


def iterative_peeling_ok(n, edges, core):
    """Check that each node's core number k is the largest k it survives at."""
    return list(core) == naive_core_numbers(n, edges)
