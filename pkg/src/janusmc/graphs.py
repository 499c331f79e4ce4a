"""Graphs for antiferromagnetic-Potts coloring: storage, I/O, generators.

Edge-list text format: one `u v` pair per line, 0-indexed, `#` starts a
comment.  Generators draw from the package's own generator so instances
are reproducible from a 64-bit seed alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .prng import PRWheel


@dataclass
class Graph:
    """Undirected simple graph with sorted per-vertex adjacency."""

    n_vertices: int
    edges: np.ndarray              # (E, 2) int64, u < v, no duplicates
    indptr: np.ndarray = None      # CSR offsets into indices
    indices: np.ndarray = None

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if len(self.edges):
            if (self.edges[:, 0] == self.edges[:, 1]).any():
                raise ValueError("self-loops are not allowed")
            lo = self.edges.min(axis=1)
            hi = self.edges.max(axis=1)
            self.edges = np.column_stack([lo, hi])
            order = np.lexsort((self.edges[:, 1], self.edges[:, 0]))
            self.edges = self.edges[order]
            if (np.diff(self.edges, axis=0) == 0).all(axis=1).any():
                raise ValueError("duplicate edges are not allowed")
            if self.edges.max() >= self.n_vertices:
                raise ValueError("edge endpoint out of range")
        if self.indptr is None:
            both = np.concatenate([self.edges, self.edges[:, ::-1]]) \
                if len(self.edges) else np.empty((0, 2), dtype=np.int64)
            order = np.lexsort((both[:, 1], both[:, 0]))
            both = both[order]
            counts = np.bincount(both[:, 0], minlength=self.n_vertices)
            self.indptr = np.concatenate([[0], np.cumsum(counts)])
            self.indices = both[:, 1].copy()

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def mean_connectivity(self) -> float:
        return 2.0 * self.n_edges / self.n_vertices if self.n_vertices else 0.0

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def padded_adjacency(self) -> tuple[np.ndarray, np.ndarray]:
        """(adj, valid): (N, maxdeg) neighbor table padded with 0s plus mask."""
        deg = self.degrees()
        maxdeg = int(deg.max()) if len(deg) and deg.max() else 1
        adj = np.zeros((self.n_vertices, maxdeg), dtype=np.int64)
        valid = np.zeros((self.n_vertices, maxdeg), dtype=bool)
        for v in range(self.n_vertices):
            nbrs = self.neighbors(v)
            adj[v, :len(nbrs)] = nbrs
            valid[v, :len(nbrs)] = True
        return adj, valid


def load_edge_list(path) -> Graph:
    edges = []
    max_vertex = -1
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'u v', got {line!r}")
            u, v = int(parts[0]), int(parts[1])
            edges.append((u, v))
            max_vertex = max(max_vertex, u, v)
    return Graph(n_vertices=max_vertex + 1,
                 edges=np.array(edges, dtype=np.int64).reshape(-1, 2))


def save_edge_list(path, graph: Graph) -> None:
    with open(path, "w") as fh:
        for u, v in graph.edges:
            fh.write(f"{u} {v}\n")


def random_graph(n: int, mean_connectivity: float, seed: int) -> Graph:
    """G(n, m) with m = round(n * C_m / 2) distinct edges, no self-loops."""
    m = round(n * mean_connectivity / 2.0)
    wheel = PRWheel.from_seed(seed)
    seen = set()
    edges = []
    while len(edges) < m:
        u = wheel.next_u32() % n
        v = wheel.next_u32() % n
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        if key in seen:
            continue
        seen.add(key)
        edges.append(key)
    return Graph(n_vertices=n, edges=np.array(edges, dtype=np.int64).reshape(-1, 2))


def planted_coloring_graph(n: int, mean_connectivity: float, colors: int,
                           seed: int) -> tuple[Graph, np.ndarray]:
    """A random graph built around a hidden proper coloring.

    Vertices get uniform hidden colors; edges are sampled only between
    differently colored endpoints, so the instance is `colors`-colorable by
    construction.  Returns (graph, hidden coloring).
    """
    wheel = PRWheel.from_seed(seed)
    hidden = np.empty(n, dtype=np.int8)
    for i in range(n):
        hidden[i] = wheel.next_u32() % colors
    m = round(n * mean_connectivity / 2.0)
    seen = set()
    edges = []
    while len(edges) < m:
        u = wheel.next_u32() % n
        v = wheel.next_u32() % n
        if u == v or hidden[u] == hidden[v]:
            continue
        key = (min(u, v), max(u, v))
        if key in seen:
            continue
        seen.add(key)
        edges.append(key)
    graph = Graph(n_vertices=n, edges=np.array(edges, dtype=np.int64).reshape(-1, 2))
    return graph, hidden
