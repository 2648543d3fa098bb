"""Simple undirected graphs with optional node attributes and community labels.

File formats
------------
edge list   one ``u v`` pair per line (tab or spaces); ``#`` starts a comment.
attributes  header ``N F`` followed by N rows of F whitespace-separated reals.
labels      N lines holding one non-negative integer each.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import rng
from .errors import ConfigError, DimensionError, ParseError


TRAIN, VAL, TEST = 0, 1, 2


def _freeze(a):
    if a is not None:
        a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class DataGraph:
    """Immutable simple graph stored as a canonical edge array plus CSR.

    ``edges`` holds each undirected edge once as ``(u, v)`` with ``u < v``,
    sorted lexicographically. ``csr_targets`` lists each node's neighbours in
    ascending order.
    """

    n_nodes: int
    edges: np.ndarray
    csr_offsets: np.ndarray
    csr_targets: np.ndarray
    attrs: np.ndarray | None = None
    labels: np.ndarray | None = None
    _adj: sp.csr_matrix | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_edges(cls, n_nodes, pairs, attrs=None, labels=None):
        """Build from an iterable/array of pairs; drops loops and duplicates."""
        n_nodes = int(n_nodes)
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if pairs.size and (pairs.min() < 0 or pairs.max() >= n_nodes):
            raise DimensionError(f"edge endpoint outside [0, {n_nodes})")
        edges = canonical_edges(pairs)
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        offsets = np.zeros(n_nodes + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n_nodes), out=offsets[1:])

        if attrs is not None:
            attrs = np.array(attrs, dtype=np.float64, copy=True)
            if attrs.ndim != 2 or attrs.shape[0] != n_nodes:
                raise DimensionError(
                    f"attribute matrix has shape {attrs.shape}, expected ({n_nodes}, F)")
        if labels is not None:
            labels = np.array(labels, dtype=np.int64, copy=True).ravel()
            if labels.shape[0] != n_nodes:
                raise DimensionError(
                    f"{labels.shape[0]} labels for {n_nodes} nodes")
            if labels.size and labels.min() < 0:
                raise DimensionError("labels must be non-negative")
        adj = sp.csr_matrix(
            (np.ones(dst.shape[0]), dst.copy(), offsets.copy()), shape=(n_nodes, n_nodes))
        return cls(n_nodes, _freeze(edges), _freeze(offsets), _freeze(dst.copy()),
                   _freeze(attrs), _freeze(labels), adj)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.csr_offsets)

    @property
    def n_features(self) -> int:
        return 0 if self.attrs is None else int(self.attrs.shape[1])

    @property
    def n_classes(self) -> int:
        return 0 if self.labels is None else int(self.labels.max()) + 1

    def neighbors(self, u: int) -> np.ndarray:
        return self.csr_targets[self.csr_offsets[u]:self.csr_offsets[u + 1]]

    def adjacency(self) -> sp.csr_matrix:
        """0/1 adjacency as a scipy CSR matrix (a copy; safe to mutate)."""
        return self._adj.copy()

    def with_attrs(self, attrs) -> "DataGraph":
        return DataGraph.from_edges(self.n_nodes, self.edges, attrs, self.labels)

    def with_labels(self, labels) -> "DataGraph":
        return DataGraph.from_edges(self.n_nodes, self.edges, self.attrs, labels)

    def check(self) -> None:
        """Re-verify structural invariants; raises AssertionError on violation."""
        a = self._adj
        assert (a != a.T).nnz == 0, "CSR adjacency is not symmetric"
        assert a.diagonal().sum() == 0, "self-loop stored"
        assert int(self.degrees.sum()) == 2 * self.n_edges


def canonical_edges(pairs: np.ndarray) -> np.ndarray:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    pairs = np.sort(pairs, axis=1)
    if pairs.shape[0] == 0:
        return np.zeros((0, 2), dtype=np.int64)
    return np.unique(pairs, axis=0)


@dataclass
class EdgeListReport:
    n_lines: int = 0
    duplicates: int = 0
    self_loops: int = 0
    max_id: int = -1


def read_edge_list(path) -> tuple[np.ndarray, EdgeListReport]:
    """Parse an edge file; returns canonical pairs and what was dropped.

    A duplicate is any pair whose unordered form was already seen, so
    ``0 1`` followed by ``1 0`` counts one duplicate.
    """
    path = Path(path)
    rep = EdgeListReport()
    raw = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) < 2:
                raise ParseError(path, lineno, f"expected 'u v', got {line!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(path, lineno, f"non-integer node id in {line!r}") from None
            if u < 0 or v < 0:
                raise ParseError(path, lineno, "node ids must be non-negative")
            raw.append((u, v))
    rep.n_lines = len(raw)
    arr = np.array(raw, dtype=np.int64).reshape(-1, 2)
    if arr.size:
        rep.max_id = int(arr.max())
    loops = arr[:, 0] == arr[:, 1]
    rep.self_loops = int(loops.sum())
    kept = canonical_edges(arr)
    rep.duplicates = int((~loops).sum()) - kept.shape[0]
    return kept, rep


def read_attrs(path) -> np.ndarray:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ParseError(path, 1, "attribute header must be 'N F'")
        try:
            n, f = int(header[0]), int(header[1])
        except ValueError:
            raise ParseError(path, 1, "attribute header must be two integers") from None
        x = np.zeros((n, f), dtype=np.float64)
        row = 0
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            if row >= n:
                raise DimensionError(f"{path}: more than the declared {n} attribute rows")
            try:
                vals = [float(t) for t in line.split()]
            except ValueError:
                raise ParseError(path, lineno, "non-numeric attribute value") from None
            if len(vals) != f:
                raise ParseError(path, lineno, f"expected {f} values, got {len(vals)}")
            x[row] = vals
            row += 1
    if row != n:
        raise DimensionError(f"{path}: header declares {n} rows, found {row}")
    return x


def read_labels(path) -> np.ndarray:
    path = Path(path)
    out = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            try:
                out.append(int(s.split()[0]))
            except ValueError:
                raise ParseError(path, lineno, f"label must be an integer, got {s!r}") from None
            if out[-1] < 0:
                raise ParseError(path, lineno, "labels must be non-negative")
    return np.array(out, dtype=np.int64)


def load_graph(edge_path, attr_path=None, label_path=None) -> DataGraph:
    pairs, rep = read_edge_list(edge_path)
    if rep.duplicates or rep.self_loops:
        warnings.warn(
            f"{edge_path}: dropped {rep.duplicates} duplicate edge(s) and "
            f"{rep.self_loops} self-loop(s)", stacklevel=2)
    n = rep.max_id + 1
    attrs = labels = None
    if attr_path is not None:
        attrs = read_attrs(attr_path)
        if attrs.shape[0] < n:
            raise DimensionError(
                f"{attr_path}: {attrs.shape[0]} attribute rows but edge ids reach {n - 1}")
        n = attrs.shape[0]
    if label_path is not None:
        labels = read_labels(label_path)
        if labels.shape[0] != n:
            raise DimensionError(f"{label_path}: {labels.shape[0]} labels for {n} nodes")
    return DataGraph.from_edges(n, pairs, attrs, labels)


def save_graph(g: DataGraph, edge_path, attr_path=None, label_path=None) -> None:
    np.savetxt(edge_path, g.edges, fmt="%d", delimiter="\t")
    if attr_path is not None and g.attrs is not None:
        write_attrs(attr_path, g.attrs)
    if label_path is not None and g.labels is not None:
        np.savetxt(label_path, g.labels, fmt="%d")


def write_attrs(path, x: np.ndarray) -> None:
    # %.17g round-trips float64 exactly
    with open(path, "w") as fh:
        fh.write(f"{x.shape[0]} {x.shape[1]}\n")
        np.savetxt(fh, x, fmt="%.17g")


def remap_ids(pairs) -> tuple[np.ndarray, np.ndarray]:
    """Relabel arbitrary non-negative ids to 0..N-1 in ascending id order.

    Returns ``(dense_pairs, id_map)`` where ``id_map[new] = old``.
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    id_map, inv = np.unique(pairs, return_inverse=True)
    return inv.reshape(-1, 2), id_map


def load_planetoid_raw(content_path, cites_path) -> tuple[DataGraph, np.ndarray, list]:
    """Read the original ``.content``/``.cites`` citation dump.

    ``.content`` rows are ``paper_id f_1 ... f_F class_name``; ``.cites`` rows
    are ``cited citing``. Citations to papers missing from ``.content`` are
    dropped. Returns the graph, the paper id of each node, and class names.
    """
    ids, feats, classes = [], [], []
    with open(content_path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 3:
                raise ParseError(content_path, lineno, "expected id, features, class")
            ids.append(parts[0])
            feats.append([float(t) for t in parts[1:-1]])
            classes.append(parts[-1])
    index = {pid: i for i, pid in enumerate(ids)}
    names = sorted(set(classes))
    labels = np.array([names.index(c) for c in classes], dtype=np.int64)
    pairs = []
    with open(cites_path) as fh:
        for line in fh:
            parts = line.split()
            if len(parts) >= 2 and parts[0] in index and parts[1] in index:
                pairs.append((index[parts[0]], index[parts[1]]))
    g = DataGraph.from_edges(len(ids), pairs, np.array(feats), labels)
    return g, np.array(ids), names


def adjacency_as_attrs(g: DataGraph) -> DataGraph:
    """Copy of ``g`` whose attributes are its dense 0/1 adjacency rows."""
    return g.with_attrs(g.adjacency().toarray())


@dataclass(frozen=True)
class SplitAssignment:
    roles: np.ndarray
    seed: int

    @property
    def train(self) -> np.ndarray:
        return np.flatnonzero(self.roles == TRAIN)

    @property
    def val(self) -> np.ndarray:
        return np.flatnonzero(self.roles == VAL)

    @property
    def test(self) -> np.ndarray:
        return np.flatnonzero(self.roles == TEST)


def split_sizes(n: int) -> tuple[int, int, int]:
    # round half up; remainder goes to test
    n_train = int(np.floor(0.8 * n + 0.5))
    n_val = int(np.floor(0.1 * n + 0.5))
    return n_train, n_val, n - n_train - n_val


def make_split(g: DataGraph, seed: int) -> SplitAssignment:
    if g.labels is None:
        raise ConfigError("make_split needs ground-truth labels")
    return split_nodes(g.n_nodes, seed)


def split_nodes(n: int, seed: int) -> SplitAssignment:
    perm = rng.stream(seed, "split").permutation(n)
    n_train, n_val, _ = split_sizes(n)
    roles = np.full(n, TEST, dtype=np.int8)
    roles[perm[:n_train]] = TRAIN
    roles[perm[n_train:n_train + n_val]] = VAL
    roles.flags.writeable = False
    return SplitAssignment(roles, int(seed))


def graph_info(g: DataGraph) -> dict:
    n = g.n_nodes
    return {
        "nodes": n,
        "edges": g.n_edges,
        "avg_degree": 2.0 * g.n_edges / n if n else 0.0,
        "attrs": g.n_features,
        "communities": g.n_classes,
    }
