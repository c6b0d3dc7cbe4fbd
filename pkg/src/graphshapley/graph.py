"""Undirected graph representation and the structural edits the explainer needs."""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import NoPath


@dataclass(frozen=True)
class Graph:
    """Undirected, unweighted graph with dense node features.

    Edges are stored canonically as (i, j) with i < j, each exactly once.
    Instances are treated as immutable; structural edits return new graphs.
    """

    num_nodes: int
    edges: frozenset[tuple[int, int]]
    features: np.ndarray
    node_labels: np.ndarray | None = None
    graph_label: int | None = None
    _adj: dict[int, list[int]] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[0] != self.num_nodes:
            raise ValueError("features must be a num_nodes x F matrix")
        object.__setattr__(self, "features", feats)
        canon = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop ({i},{i}) not allowed")
            if not (0 <= i < self.num_nodes and 0 <= j < self.num_nodes):
                raise ValueError(f"edge ({i},{j}) references missing node")
            canon.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(canon))
        if self.node_labels is not None:
            labels = np.asarray(self.node_labels, dtype=np.int64)
            if labels.shape != (self.num_nodes,):
                raise ValueError("node_labels length must equal num_nodes")
            object.__setattr__(self, "node_labels", labels)
        object.__setattr__(self, "_adj", None)

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    def adjacency(self) -> dict[int, list[int]]:
        """Neighbor lists, built lazily and cached (sorted for determinism)."""
        if self._adj is None:
            adj: dict[int, list[int]] = {v: [] for v in range(self.num_nodes)}
            for i, j in self.edges:
                adj[i].append(j)
                adj[j].append(i)
            for v in adj:
                adj[v].sort()
            object.__setattr__(self, "_adj", adj)
        return self._adj

    def degree(self, v: int) -> int:
        return len(self.adjacency()[v])

    def dense_adjacency(self) -> np.ndarray:
        a = np.zeros((self.num_nodes, self.num_nodes))
        for i, j in self.edges:
            a[i, j] = a[j, i] = 1.0
        return a

    def with_edges(self, edges) -> Graph:
        """Copy of this graph with a replacement edge set."""
        return Graph(self.num_nodes, frozenset(edges), self.features,
                     self.node_labels, self.graph_label)

    def with_features(self, features: np.ndarray) -> Graph:
        return Graph(self.num_nodes, self.edges, features,
                     self.node_labels, self.graph_label)


def k_hop_neighbors(g: Graph, v: int, k: int) -> list[int]:
    """All nodes within shortest-path distance k of v, excluding v, ascending ids."""
    if not 0 <= v < g.num_nodes:
        raise ValueError(f"node {v} outside graph")
    if k < 1:
        raise ValueError("k must be >= 1")
    adj = g.adjacency()
    dist = {v: 0}
    frontier = deque([v])
    while frontier:
        u = frontier.popleft()
        if dist[u] == k:
            continue
        for w in adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                frontier.append(w)
    return sorted(u for u in dist if u != v)


def shortest_path(g: Graph, v: int, w: int, rng: np.random.Generator | None = None) -> list[int]:
    """One minimum-hop path from v to w, endpoints included.

    Ties between equal-length paths are broken lexicographically on the
    node-id sequence so explanations are deterministic. Passing ``rng``
    instead samples uniformly among the predecessors on shortest paths.
    Raises NoPath when v and w are disconnected.
    """
    if not (0 <= v < g.num_nodes and 0 <= w < g.num_nodes):
        raise ValueError("endpoint outside graph")
    if v == w:
        return [v]
    adj = g.adjacency()
    # Dijkstra on unit weights (equivalent to BFS); track distances from v.
    dist = {v: 0}
    heap = [(0, v)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist.get(u, np.inf):
            continue
        for x in adj[u]:
            if x not in dist or d + 1 < dist[x]:
                dist[x] = d + 1
                heapq.heappush(heap, (d + 1, x))
    if w not in dist:
        raise NoPath(f"nodes {v} and {w} are disconnected")
    # Walk back from w, choosing at each step the predecessor on a shortest
    # path. Lexicographic-smallest full sequence = greedy smallest successor
    # walking forward from v, so build forward instead.
    dist_w = {w: 0}
    frontier = deque([w])
    while frontier:
        u = frontier.popleft()
        for x in adj[u]:
            if x not in dist_w:
                dist_w[x] = dist_w[u] + 1
                frontier.append(x)
    total = dist[w]
    path = [v]
    cur = v
    while cur != w:
        step = len(path) - 1
        candidates = [x for x in adj[cur]
                      if dist_w.get(x, np.inf) == total - step - 1]
        if rng is None:
            cur = min(candidates)
        else:
            cur = candidates[int(rng.integers(len(candidates)))]
        path.append(cur)
    return path


def isolate_nodes(g: Graph, excluded) -> Graph:
    """Remove every edge incident to any node in ``excluded``; features untouched."""
    excluded = set(excluded)
    for u in excluded:
        if not 0 <= u < g.num_nodes:
            raise ValueError(f"node {u} outside graph")
    kept = [(i, j) for i, j in g.edges if i not in excluded and j not in excluded]
    return g.with_edges(kept)
