"""
Immutable undirected simple graphs stored in CSR form.

Node ids are dense integers ``0..N-1``. Original labels (from an edge list)
are kept on the graph so results can be written back out with them.
"""

from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np


class GraphError(ValueError):
    """Raised for malformed edge lists or invalid graph construction."""


class EdgeListParseError(GraphError):
    def __init__(self, lineno: int, line: str):
        super().__init__(f"line {lineno}: expected 2 tokens, got {line!r}")
        self.lineno = lineno


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph.

    ``indptr``/``indices`` are the CSR adjacency; ``indices[indptr[i]:indptr[i+1]]``
    are the neighbors of ``i`` in ascending order.
    """

    indptr: np.ndarray
    indices: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)

    @property
    def node_count(self) -> int:
        return len(self.indptr) - 1

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def adjacency(self) -> list[np.ndarray]:
        return [self.neighbors(i) for i in range(self.node_count)]

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels is not None else str(i)

    def edges(self) -> np.ndarray:
        """Each undirected edge once, as an (E, 2) array with ``u < v``."""
        src = np.repeat(np.arange(self.node_count), self.degrees)
        mask = src < self.indices
        return np.column_stack([src[mask], self.indices[mask]])

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]] | np.ndarray,
                   labels: Sequence[str] | None = None) -> "Graph":
        """Build from an edge iterable; self-loops and duplicates are dropped."""
        g, _, _ = _build(n, edges, labels)
        return g

    def check_invariants(self) -> None:
        """Full adjacency scan: sorted, symmetric, no loops, no duplicates."""
        n = self.node_count
        if self.indptr[0] != 0 or np.any(np.diff(self.indptr) < 0):
            raise GraphError("bad indptr")
        if len(self.indices) % 2:
            raise GraphError("odd number of adjacency entries")
        src = np.repeat(np.arange(n), self.degrees)
        if np.any(src == self.indices):
            raise GraphError("self-loop present")
        if len(self.indices) and (self.indices.min() < 0 or self.indices.max() >= n):
            raise GraphError("neighbor id out of range")
        for i in range(n):
            nb = self.neighbors(i)
            if np.any(np.diff(nb) <= 0):
                raise GraphError(f"unsorted or duplicate neighbors at node {i}")
        fwd = src * n + self.indices
        bwd = self.indices * n + src
        if not np.array_equal(np.sort(fwd), np.sort(bwd)):
            raise GraphError("adjacency is not symmetric")


def _build(n, edges, labels=None):
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                     dtype=np.int64).reshape(-1, 2)
    if n < 1:
        raise GraphError("graph has no nodes")
    if len(arr) and (arr.min() < 0 or arr.max() >= n):
        raise GraphError("edge endpoint out of range")
    loops = arr[:, 0] == arr[:, 1]
    arr = arr[~loops]
    lo = np.minimum(arr[:, 0], arr[:, 1])
    hi = np.maximum(arr[:, 0], arr[:, 1])
    key = np.unique(lo * n + hi)
    duplicates = len(arr) - len(key)
    lo, hi = key // n, key % n
    src = np.concatenate([lo, hi])
    dst = np.concatenate([hi, lo])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    g = Graph(indptr, dst.astype(np.int64), tuple(labels) if labels is not None else None)
    return g, int(duplicates), int(loops.sum())


@dataclass
class LoadReport:
    node_count: int
    edge_count: int
    duplicate_edges: int = 0
    self_loops: int = 0
    label_to_id: dict[str, int] = field(default_factory=dict)


def load_edge_list(stream: TextIO | str) -> tuple[Graph, LoadReport]:
    """Parse a whitespace-separated edge list.

    Labels are mapped to ids in first-appearance order. Lines that are blank
    or start with ``#`` are skipped. Duplicate edges and self-loops are
    dropped but counted in the returned report.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    ids: dict[str, int] = {}
    pairs = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise EdgeListParseError(lineno, line)
        a, b = (ids.setdefault(t, len(ids)) for t in tokens)
        pairs.append((a, b))
    if not ids:
        raise GraphError("empty graph")
    labels = list(ids)
    g, dups, loops = _build(len(ids), pairs, labels)
    return g, LoadReport(g.node_count, g.edge_count, dups, loops, dict(ids))


def write_edge_list(g: Graph, stream: TextIO, use_labels: bool = True) -> None:
    for u, v in g.edges():
        if use_labels:
            stream.write(f"{g.label(u)} {g.label(v)}\n")
        else:
            stream.write(f"{u} {v}\n")


def write_label_map(g: Graph, stream: TextIO) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["label", "id"])
    for i in range(g.node_count):
        w.writerow([g.label(i), i])


def degree(g: Graph, i: int) -> int:
    return int(g.indptr[i + 1] - g.indptr[i])


def core_decomposition(g: Graph) -> np.ndarray:
    """k-core number of every node (Batagelj-Zaversnik bucket peeling)."""
    n = g.node_count
    deg = g.degrees.copy()
    maxdeg = int(deg.max()) if n else 0
    # bucket sort nodes by degree
    bin_start = np.zeros(maxdeg + 2, dtype=np.int64)
    np.add.at(bin_start, deg + 1, 1)
    bin_start = np.cumsum(bin_start)
    order = np.argsort(deg, kind="stable")
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    bin_start = bin_start[:-1].copy()
    indptr, indices = g.indptr, g.indices
    for idx in range(n):
        v = order[idx]
        for u in indices[indptr[v]:indptr[v + 1]]:
            if deg[u] > deg[v]:
                du = deg[u]
                pu = pos[u]
                pw = bin_start[du]
                w = order[pw]
                if u != w:
                    order[pu], order[pw] = w, u
                    pos[u], pos[w] = pw, pu
                bin_start[du] += 1
                deg[u] -= 1
    return deg


def bfs_distances(g: Graph, sources: Iterable[int]) -> np.ndarray:
    """Multi-source hop distances as floats; ``inf`` where unreachable."""
    src = np.unique(np.asarray(list(sources), dtype=np.int64))
    if len(src) == 0:
        raise GraphError("bfs needs at least one source")
    dist = np.full(g.node_count, -1, dtype=np.int64)
    dist[src] = 0
    queue = deque(src.tolist())
    indptr, indices = g.indptr, g.indices
    while queue:
        v = queue.popleft()
        dv = dist[v] + 1
        for u in indices[indptr[v]:indptr[v + 1]]:
            if dist[u] < 0:
                dist[u] = dv
                queue.append(u)
    out = dist.astype(float)
    out[dist < 0] = np.inf
    return out


def connected_components(g: Graph) -> np.ndarray:
    """Component id per node, numbered in order of lowest member id."""
    comp = np.full(g.node_count, -1, dtype=np.int64)
    c = 0
    for s in range(g.node_count):
        if comp[s] >= 0:
            continue
        comp[s] = c
        stack = [s]
        while stack:
            v = stack.pop()
            for u in g.neighbors(v):
                if comp[u] < 0:
                    comp[u] = c
                    stack.append(u)
        c += 1
    return comp


def induced_subgraph(g: Graph, nodes: Sequence[int]) -> Graph:
    nodes = np.sort(np.asarray(nodes, dtype=np.int64))
    remap = np.full(g.node_count, -1, dtype=np.int64)
    remap[nodes] = np.arange(len(nodes))
    e = g.edges()
    keep = (remap[e[:, 0]] >= 0) & (remap[e[:, 1]] >= 0)
    labels = [g.label(i) for i in nodes]
    return Graph.from_edges(len(nodes), remap[e[keep]], labels)


def giant_component(g: Graph) -> Graph:
    comp = connected_components(g)
    largest = np.bincount(comp).argmax()
    return induced_subgraph(g, np.flatnonzero(comp == largest))
