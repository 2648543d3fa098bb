"""Dense-substructure mining: per-edge pattern counts and the structure view.

The kernels work on the CSR arrays of a :class:`~structcl.graph.DataGraph`.
Every edge is identified by its row in ``g.edges``; ``edge_ids(g)`` gives the
id of each CSR slot so that neighbour-list intersections can address edges
directly.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, ParseError
from .graph import DataGraph

PATTERN_NAMES = ("triangle", "k-core", "k-truss", "k-plex")
_PATTERN_RE = re.compile(r"^\s*(triangle|k-core|k-truss|k-plex)\s*(?:\(\s*(\d+)\s*\))?\s*$")


@dataclass(frozen=True)
class Pattern:
    name: str
    k: int | None = None

    def __str__(self):
        return self.name if self.k is None else f"{self.name}({self.k})"


def parse_patterns(spec) -> tuple[Pattern, ...]:
    """Parse ``"triangle,k-core(3)"`` (or a list of such tokens)."""
    if isinstance(spec, str):
        tokens = [t for t in re.split(r",(?![^(]*\))", spec) if t.strip()]
    else:
        tokens = [str(t) for t in spec]
    if not tokens:
        raise ConfigError("pattern set must be non-empty")
    out = []
    for tok in tokens:
        m = _PATTERN_RE.match(tok)
        if not m:
            raise ConfigError(f"unsupported pattern {tok.strip()!r}; known: {', '.join(PATTERN_NAMES)}")
        name, k = m.group(1), m.group(2)
        if name == "triangle":
            if k is not None:
                raise ConfigError("triangle takes no parameter")
            out.append(Pattern("triangle"))
            continue
        if k is None:
            raise ConfigError(f"{name} needs a parameter, e.g. {name}(3)")
        if int(k) < 1:
            raise ConfigError(f"{name} parameter must be >= 1")
        if name == "k-plex":
            raise ConfigError("k-plex scoring is not supported")
        out.append(Pattern(name, int(k)))
    return tuple(out)


DEFAULT_PATTERNS = (Pattern("triangle"),)


@numba.njit(cache=True)
def _slot_edge_ids(offsets, targets, eu, ev):
    n = offsets.shape[0] - 1
    out = np.empty(targets.shape[0], dtype=np.int64)
    # edges are sorted by (u, v) with u < v, so walking each row's upper part
    # in order visits edge ids consecutively
    e = 0
    for u in range(n):
        for p in range(offsets[u], offsets[u + 1]):
            if targets[p] > u:
                out[p] = e
                e += 1
    for u in range(n):
        for p in range(offsets[u], offsets[u + 1]):
            v = targets[p]
            if v < u:
                # find the slot of u in row v
                lo, hi = offsets[v], offsets[v + 1]
                while lo < hi:
                    mid = (lo + hi) // 2
                    if targets[mid] < u:
                        lo = mid + 1
                    else:
                        hi = mid
                out[p] = out[lo]
    return out


def edge_ids(g: DataGraph) -> np.ndarray:
    """Edge id of every CSR slot (aligned with ``g.csr_targets``)."""
    return _slot_edge_ids(g.csr_offsets, g.csr_targets, g.edges[:, 0], g.edges[:, 1])


@numba.njit(cache=True)
def _triangles(offsets, targets, eids, degree, m):
    n = offsets.shape[0] - 1
    # orient each edge from lower to higher (degree, id) rank
    out_off = np.zeros(n + 1, dtype=np.int64)
    for u in range(n):
        c = 0
        for p in range(offsets[u], offsets[u + 1]):
            v = targets[p]
            if degree[v] > degree[u] or (degree[v] == degree[u] and v > u):
                c += 1
        out_off[u + 1] = out_off[u] + c
    out_t = np.empty(out_off[n], dtype=np.int64)
    out_e = np.empty(out_off[n], dtype=np.int64)
    for u in range(n):
        q = out_off[u]
        for p in range(offsets[u], offsets[u + 1]):
            v = targets[p]
            if degree[v] > degree[u] or (degree[v] == degree[u] and v > u):
                out_t[q] = v
                out_e[q] = eids[p]
                q += 1
    counts = np.zeros(m, dtype=np.int64)
    for u in range(n):
        for p in range(out_off[u], out_off[u + 1]):
            v = out_t[p]
            e_uv = out_e[p]
            # merge out(u) and out(v); both ascending by id
            i, iend = out_off[u], out_off[u + 1]
            j, jend = out_off[v], out_off[v + 1]
            while i < iend and j < jend:
                a, b = out_t[i], out_t[j]
                if a < b:
                    i += 1
                elif a > b:
                    j += 1
                else:
                    counts[e_uv] += 1
                    counts[out_e[i]] += 1
                    counts[out_e[j]] += 1
                    i += 1
                    j += 1
    return counts


def count_edge_triangles(g: DataGraph) -> np.ndarray:
    """Triangle support of every edge, aligned with ``g.edges``."""
    if g.n_edges == 0:
        return np.zeros(0, dtype=np.int64)
    return _triangles(g.csr_offsets, g.csr_targets, edge_ids(g), g.degrees, g.n_edges)


@numba.njit(cache=True)
def _core_numbers(offsets, targets):
    # Batagelj-Zaversnik bucket peeling
    n = offsets.shape[0] - 1
    deg = np.empty(n, dtype=np.int64)
    md = 0
    for u in range(n):
        deg[u] = offsets[u + 1] - offsets[u]
        if deg[u] > md:
            md = deg[u]
    bins = np.zeros(md + 1, dtype=np.int64)
    for u in range(n):
        bins[deg[u]] += 1
    start = 0
    for d in range(md + 1):
        c = bins[d]
        bins[d] = start
        start += c
    pos = np.empty(n, dtype=np.int64)
    vert = np.empty(n, dtype=np.int64)
    for u in range(n):
        pos[u] = bins[deg[u]]
        vert[pos[u]] = u
        bins[deg[u]] += 1
    for d in range(md, 0, -1):
        bins[d] = bins[d - 1]
    if md >= 0:
        bins[0] = 0
    for i in range(n):
        v = vert[i]
        for p in range(offsets[v], offsets[v + 1]):
            u = targets[p]
            if deg[u] > deg[v]:
                du = deg[u]
                pu = pos[u]
                pw = bins[du]
                w = vert[pw]
                if u != w:
                    pos[u] = pw
                    vert[pu] = w
                    pos[w] = pu
                    vert[pw] = u
                bins[du] += 1
                deg[u] -= 1
    return deg


def core_decomposition(g: DataGraph) -> np.ndarray:
    """Core number of every node."""
    if g.n_nodes == 0:
        return np.zeros(0, dtype=np.int64)
    return _core_numbers(g.csr_offsets, g.csr_targets)


@numba.njit(cache=True)
def _truss_numbers(offsets, targets, eids, eu, ev, support):
    m = eu.shape[0]
    sup = support.copy()
    ms = 0
    for e in range(m):
        if sup[e] > ms:
            ms = sup[e]
    bins = np.zeros(ms + 1, dtype=np.int64)
    for e in range(m):
        bins[sup[e]] += 1
    start = 0
    for s in range(ms + 1):
        c = bins[s]
        bins[s] = start
        start += c
    pos = np.empty(m, dtype=np.int64)
    order = np.empty(m, dtype=np.int64)
    for e in range(m):
        pos[e] = bins[sup[e]]
        order[pos[e]] = e
        bins[sup[e]] += 1
    for s in range(ms, 0, -1):
        bins[s] = bins[s - 1]
    bins[0] = 0
    removed = np.zeros(m, dtype=np.bool_)
    truss = np.empty(m, dtype=np.int64)
    for i in range(m):
        e = order[i]
        se = sup[e]
        truss[e] = se + 2
        u, v = eu[e], ev[e]
        a, aend = offsets[u], offsets[u + 1]
        b, bend = offsets[v], offsets[v + 1]
        while a < aend and b < bend:
            x, y = targets[a], targets[b]
            if x < y:
                a += 1
            elif x > y:
                b += 1
            else:
                f1 = eids[a]
                f2 = eids[b]
                if not removed[f1] and not removed[f2]:
                    for f in (f1, f2):
                        if sup[f] > se:
                            sf = sup[f]
                            pf = pos[f]
                            pw = bins[sf]
                            w = order[pw]
                            if f != w:
                                pos[f] = pw
                                order[pf] = w
                                pos[w] = pf
                                order[pw] = f
                            bins[sf] += 1
                            sup[f] -= 1
                a += 1
                b += 1
        removed[e] = True
    return truss


def truss_decomposition(g: DataGraph) -> np.ndarray:
    """Truss number of every edge (aligned with ``g.edges``); 2 for edges in no triangle."""
    if g.n_edges == 0:
        return np.zeros(0, dtype=np.int64)
    eids = edge_ids(g)
    sup = _triangles(g.csr_offsets, g.csr_targets, eids, g.degrees, g.n_edges)
    return _truss_numbers(g.csr_offsets, g.csr_targets, eids,
                          g.edges[:, 0].copy(), g.edges[:, 1].copy(), sup)


def count_patterns(g: DataGraph, patterns=DEFAULT_PATTERNS) -> np.ndarray:
    """Summed per-edge pattern scores, aligned with ``g.edges``.

    triangle contributes the edge's triangle count; ``k-core(k)`` and
    ``k-truss(k)`` contribute a 0/1 membership indicator.
    """
    if isinstance(patterns, str):
        patterns = parse_patterns(patterns)
    if not patterns:
        raise ConfigError("pattern set must be non-empty")
    dic = np.zeros(g.n_edges, dtype=np.int64)
    core = truss = None
    for p in patterns:
        if p.name == "triangle":
            dic += count_edge_triangles(g)
        elif p.name == "k-core":
            if core is None:
                core = core_decomposition(g)
            dic += (np.minimum(core[g.edges[:, 0]], core[g.edges[:, 1]]) >= p.k)
        elif p.name == "k-truss":
            if truss is None:
                truss = truss_decomposition(g)
            dic += truss >= p.k
        else:
            raise ConfigError(f"unsupported pattern {p}")
    return dic


@dataclass(frozen=True, eq=False)
class StructureView:
    """Per-edge counts ``dic`` (aligned with ``edges``), the masked graph and S."""

    n_nodes: int
    edges: np.ndarray
    dic: np.ndarray
    high_adj: sp.csr_matrix
    sim: sp.csr_matrix

    @property
    def edge_sim(self) -> np.ndarray:
        return edge_similarity(self.dic)

    @property
    def high_edges(self) -> np.ndarray:
        return self.edges[self.dic > 0]

    def dic_as_dict(self) -> dict:
        return {(int(u), int(v)): int(c) for (u, v), c in zip(self.edges, self.dic)}

    def high_graph(self, like: DataGraph | None = None) -> DataGraph:
        attrs = labels = None
        if like is not None:
            attrs, labels = like.attrs, like.labels
        return DataGraph.from_edges(self.n_nodes, self.high_edges, attrs, labels)


def edge_similarity(dic: np.ndarray) -> np.ndarray:
    dic = np.asarray(dic)
    top = dic.max() if dic.size else 0
    return (dic + 1.0) / (top + 1.0)


def _symmetric(n, edges, values, diag=None):
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    vals = np.concatenate([values, values]).astype(np.float64)
    if diag is not None:
        idx = np.arange(n)
        rows = np.concatenate([rows, idx])
        cols = np.concatenate([cols, idx])
        vals = np.concatenate([vals, np.full(n, diag, dtype=np.float64)])
    m = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    m.sort_indices()
    return m


def view_from_counts(n_nodes: int, edges: np.ndarray, dic: np.ndarray) -> StructureView:
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    dic = np.asarray(dic, dtype=np.int64)
    keep = dic > 0
    high = _symmetric(n_nodes, edges[keep], np.ones(int(keep.sum())))
    sim = _symmetric(n_nodes, edges, edge_similarity(dic), diag=1.0)
    return StructureView(n_nodes, edges, dic, high, sim)


def build_structure_view(g: DataGraph, patterns=DEFAULT_PATTERNS) -> StructureView:
    return view_from_counts(g.n_nodes, g.edges, count_patterns(g, patterns))


def save_structure_view(view: StructureView, path, high_edge_path=None) -> None:
    """Write ``u v count sim`` rows (one per edge) and optionally the G^H edge list."""
    with open(path, "w") as fh:
        fh.write(f"# n_nodes {view.n_nodes}\n")
        for (u, v), c, s in zip(view.edges, view.dic, view.edge_sim):
            fh.write(f"{u} {v} {c} {s:.17g}\n")
    if high_edge_path is not None:
        np.savetxt(high_edge_path, view.high_edges, fmt="%d", delimiter="\t")


def load_structure_view(path, n_nodes: int | None = None) -> StructureView:
    path = Path(path)
    edges, counts = [], []
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if s.startswith("# n_nodes") and n_nodes is None:
                n_nodes = int(s.split()[-1])
                continue
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) != 4:
                raise ParseError(path, lineno, "expected 'u v count sim'")
            try:
                edges.append((int(parts[0]), int(parts[1])))
                counts.append(int(parts[2]))
            except ValueError:
                raise ParseError(path, lineno, "malformed mining row") from None
    if n_nodes is None:
        raise ParseError(path, 1, "node count unknown (missing '# n_nodes' header)")
    e = np.array(edges, dtype=np.int64).reshape(-1, 2)
    return view_from_counts(n_nodes, e, np.array(counts, dtype=np.int64))
