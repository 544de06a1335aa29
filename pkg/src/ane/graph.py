"""Weighted undirected graphs: edge-list loading, cleanup, transition matrix.

Edge-list files are UTF-8 text with one edge per line, whitespace separated,
either ``src dst`` or ``src dst weight``. Lines starting with ``#`` are
ignored. Node ids may be arbitrary strings; they are mapped to dense indices
``0..N-1`` in order of first appearance so runs are reproducible.
"""

from __future__ import annotations

import numpy as np


class EdgeListError(ValueError):
    """Malformed or invalid edge-list input."""


class GraphError(ValueError):
    """Structurally unusable graph (e.g. empty after preprocessing)."""


class Graph:
    """Immutable undirected weighted graph with dense node indices.

    Attributes
    ----------
    num_nodes : int
    ids : list of str
        External id of each dense index.
    index_of : dict
        External id -> dense index.
    nbr_idx, nbr_wt : lists of arrays
        Per-node neighbor indices (sorted ascending) and matching weights.
    """

    def __init__(self, ids, edges):
        """Build from external ids and undirected edges ``{(i, j): w}``.

        ``edges`` keys are unordered dense-index pairs with ``i <= j``;
        a key ``(i, i)`` is a self-loop. Weights must be positive and finite.
        """
        n = len(ids)
        adj = [{} for _ in range(n)]
        for (i, j), w in edges.items():
            if not (0 <= i <= j < n):
                raise GraphError(f"edge ({i},{j}) out of range for N={n}")
            if not np.isfinite(w) or w < 0:
                raise GraphError(f"edge ({i},{j}) has invalid weight {w!r}")
            adj[i][j] = w
            adj[j][i] = w

        self.num_nodes = n
        self.ids = list(ids)
        self.index_of = {v: k for k, v in enumerate(self.ids)}
        self.nbr_idx = []
        self.nbr_wt = []
        for i in range(n):
            order = sorted(adj[i])
            self.nbr_idx.append(np.array(order, dtype=np.int64))
            self.nbr_wt.append(np.array([adj[i][j] for j in order], dtype=np.float64))

    def degrees(self):
        """Weighted degree of every node (sum of incident edge weights)."""
        return np.array([w.sum() for w in self.nbr_wt], dtype=np.float64)

    def num_edges(self):
        """Number of undirected edges (self-loops count once)."""
        total = sum(len(a) for a in self.nbr_idx)
        loops = sum(int((a == i).any()) for i, a in enumerate(self.nbr_idx))
        return (total + loops) // 2

    def has_edge(self, i, j):
        pos = np.searchsorted(self.nbr_idx[i], j)
        return pos < len(self.nbr_idx[i]) and self.nbr_idx[i][pos] == j

    def __len__(self):
        return self.num_nodes

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.num_nodes == other.num_nodes
            and self.ids == other.ids
            and all(np.array_equal(a, b) for a, b in zip(self.nbr_idx, other.nbr_idx))
            and all(np.array_equal(a, b) for a, b in zip(self.nbr_wt, other.nbr_wt))
        )

    def __repr__(self):
        return f"Graph(N={self.num_nodes}, E={self.num_edges()})"


def parse_edge_lines(lines, weighted=True, source="<memory>"):
    """Parse edge-list lines into a Graph.

    Repeated directed lines ``(i, j)`` have their weights summed, then the
    undirected weight is ``max(w_ij, w_ji)`` so symmetric duplicates in a
    file do not double the weight. ``weighted=False`` forces every weight
    to 1.0 regardless of file content.
    """
    ids = []
    index_of = {}
    directed = {}

    def dense(token):
        if token not in index_of:
            index_of[token] = len(ids)
            ids.append(token)
        return index_of[token]

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise EdgeListError(
                f"{source}:{lineno}: expected 'src dst' or 'src dst weight', got {line!r}"
            )
        if weighted and len(parts) == 3:
            try:
                w = float(parts[2])
            except ValueError:
                raise EdgeListError(
                    f"{source}:{lineno}: weight {parts[2]!r} is not a number"
                ) from None
            if not np.isfinite(w):
                raise EdgeListError(f"{source}:{lineno}: weight {parts[2]!r} is not finite")
            if w < 0:
                raise EdgeListError(f"{source}:{lineno}: negative weight {w}")
        else:
            w = 1.0
        i, j = dense(parts[0]), dense(parts[1])
        directed[(i, j)] = directed.get((i, j), 0.0) + w

    edges = {}
    for (i, j), w in directed.items():
        key = (i, j) if i <= j else (j, i)
        other = directed.get((j, i), 0.0)
        edges[key] = max(w, other)
    return Graph(ids, edges)


def load_edge_list(path, weighted=True):
    """Load an edge-list file into a Graph. See module docstring for format."""
    with open(path, encoding="utf-8") as fh:
        return parse_edge_lines(fh, weighted=weighted, source=str(path))


def preprocess(g):
    """Drop self-loops, zero-weight edges and zero-degree nodes; re-densify.

    External ids are preserved so labels stay alignable. Idempotent: applying
    it to an already-clean graph returns an equal graph.
    """
    edges = {}
    for i in range(g.num_nodes):
        for j, w in zip(g.nbr_idx[i], g.nbr_wt[i]):
            if i < j and w > 0:
                edges[(i, int(j))] = float(w)

    keep = sorted({i for ij in edges for i in ij})
    if not keep:
        raise GraphError("graph has no usable nodes after preprocessing")
    remap = {old: new for new, old in enumerate(keep)}
    new_ids = [g.ids[old] for old in keep]
    new_edges = {(remap[i], remap[j]): w for (i, j), w in edges.items()}
    return Graph(new_ids, new_edges)


def row_normalize(g):
    """Dense row-stochastic transition matrix: entry (i, j) is w_ij / deg(i).

    Requires every node to have positive degree (run :func:`preprocess` first).
    """
    n = g.num_nodes
    mat = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        deg = g.nbr_wt[i].sum()
        if deg <= 0:
            raise GraphError(f"node {g.ids[i]!r} has zero degree; cannot normalize")
        mat[i, g.nbr_idx[i]] = g.nbr_wt[i] / deg
    return mat
