"""Immutable undirected simple graphs, BFS, and ego-network extraction.

Node ids are dense 0-based integers. Graphs are frozen after construction
and safe to share across threads; all functions here are pure.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph in compressed adjacency form.

    ``edges`` holds each edge once as ``(u, v)`` with ``u < v``;
    ``adjacency[v]`` is the ascending tuple of neighbors of ``v``.
    ``node_features`` (if present) is a read-only float array with one row
    per node. ``edge_features`` maps canonical ``(u, v)`` pairs to vectors.
    """

    num_nodes: int
    edges: tuple[tuple[int, int], ...]
    adjacency: tuple[tuple[int, ...], ...]
    node_features: np.ndarray | None = None
    edge_features: dict[tuple[int, int], np.ndarray] | None = None

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def has_edge(self, u: int, v: int) -> bool:
        if u > v:
            u, v = v, u
        return v in self.adjacency[u]

    def degrees(self) -> list[int]:
        return [len(nbrs) for nbrs in self.adjacency]


@dataclass(frozen=True)
class EgoNet:
    """Induced K-hop subgraph around a center node.

    ``to_parent[i]`` is the parent-graph id of local node ``i``; local ids
    preserve the relative order of parent ids. ``identity_mask`` is true at
    the identity-colored node. When the requested conditioning node lies
    outside the K-hop ball the mask is all false (at most one true overall),
    so downstream message passing degrades to the plain, uncolored scheme.
    """

    subgraph: Graph
    center_local_index: int
    to_parent: tuple[int, ...]
    identity_mask: tuple[bool, ...]

    @property
    def identity_local_index(self) -> int | None:
        for i, flag in enumerate(self.identity_mask):
            if flag:
                return i
        return None


def _check_node(g_or_n, v: int, name: str = "node") -> None:
    n = g_or_n if isinstance(g_or_n, int) else g_or_n.num_nodes
    if not (isinstance(v, (int, np.integer)) and 0 <= v < n):
        raise InputError(f"{name} {v!r} out of range for graph with {n} nodes")


def build_graph(
    num_nodes: int,
    edges,
    node_features=None,
    edge_features: dict[tuple[int, int], np.ndarray] | None = None,
) -> Graph:
    """Construct a Graph, dropping self-loops and collapsing duplicate edges.

    Raises InputError on out-of-range endpoints or a feature row-count
    mismatch.
    """
    if num_nodes < 0:
        raise InputError(f"num_nodes must be nonnegative, got {num_nodes}")
    canon = set()
    for u, v in edges:
        u, v = int(u), int(v)
        _check_node(num_nodes, u, "edge endpoint")
        _check_node(num_nodes, v, "edge endpoint")
        if u == v:
            continue
        canon.add((u, v) if u < v else (v, u))
    edge_tuple = tuple(sorted(canon))

    nbrs: list[list[int]] = [[] for _ in range(num_nodes)]
    for u, v in edge_tuple:
        nbrs[u].append(v)
        nbrs[v].append(u)
    adjacency = tuple(tuple(sorted(ns)) for ns in nbrs)

    feats = None
    if node_features is not None:
        feats = np.asarray(node_features, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[0] != num_nodes:
            raise InputError(
                f"node_features must have {num_nodes} rows, got shape {feats.shape}"
            )
        feats.setflags(write=False)

    efeats = None
    if edge_features is not None:
        efeats = {}
        for (u, v), vec in edge_features.items():
            key = (u, v) if u < v else (v, u)
            if key not in canon:
                raise InputError(f"edge feature for non-edge {key}")
            arr = np.asarray(vec, dtype=np.float64)
            arr.setflags(write=False)
            efeats[key] = arr

    return Graph(num_nodes, edge_tuple, adjacency, feats, efeats)


def bfs_distances(g: Graph, source: int, cap: int) -> list[int | None]:
    """Hop distances from ``source``; None for nodes farther than ``cap``."""
    _check_node(g, source, "source")
    if cap < 0:
        raise InputError(f"cap must be nonnegative, got {cap}")
    dist: list[int | None] = [None] * g.num_nodes
    dist[source] = 0
    frontier = deque([source])
    while frontier:
        u = frontier.popleft()
        if dist[u] >= cap:
            continue
        for w in g.adjacency[u]:
            if dist[w] is None:
                dist[w] = dist[u] + 1
                frontier.append(w)
    return dist


def induced_subgraph(g: Graph, nodes) -> tuple[Graph, tuple[int, ...]]:
    """Induced subgraph on ``nodes``; returns (subgraph, local-to-parent map).

    Local ids follow ascending parent id order. Node and edge features are
    sliced from the parent graph.
    """
    parents = tuple(sorted(set(int(v) for v in nodes)))
    for v in parents:
        _check_node(g, v)
    local = {p: i for i, p in enumerate(parents)}
    sub_edges = []
    member = set(parents)
    for u, v in g.edges:
        if u in member and v in member:
            sub_edges.append((local[u], local[v]))
    feats = None
    if g.node_features is not None:
        feats = g.node_features[list(parents), :]
    efeats = None
    if g.edge_features is not None:
        efeats = {
            (local[u], local[v]): vec
            for (u, v), vec in g.edge_features.items()
            if u in member and v in member
        }
    sub = build_graph(len(parents), sub_edges, feats, efeats)
    return sub, parents


def extract_ego(g: Graph, center: int, k: int, identity_at: int | None = None) -> EgoNet:
    """Extract the induced K-hop ego network around ``center``.

    The identity color goes to ``identity_at`` (default: the center). If the
    conditioning node falls outside the ball, the mask is all false rather
    than an error; see EgoNet.
    """
    _check_node(g, center, "center")
    if k < 0:
        raise InputError(f"k must be nonnegative, got {k}")
    if identity_at is None:
        identity_at = center
    else:
        _check_node(g, identity_at, "identity_at")

    dist = bfs_distances(g, center, k)
    ball = [v for v, d in enumerate(dist) if d is not None]
    sub, parents = induced_subgraph(g, ball)
    local = {p: i for i, p in enumerate(parents)}
    mask = [False] * len(parents)
    if identity_at in local:
        mask[local[identity_at]] = True
    return EgoNet(
        subgraph=sub,
        center_local_index=local[center],
        to_parent=parents,
        identity_mask=tuple(mask),
    )


def relabel_graph(g: Graph, perm) -> Graph:
    """Relabel nodes by a permutation: new id of node v is ``perm[v]``."""
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(g.num_nodes)):
        raise InputError("perm is not a permutation of the node ids")
    edges = [(perm[u], perm[v]) for u, v in g.edges]
    feats = None
    if g.node_features is not None:
        inv = np.empty(g.num_nodes, dtype=np.int64)
        inv[perm] = np.arange(g.num_nodes)
        feats = g.node_features[inv, :]
    efeats = None
    if g.edge_features is not None:
        efeats = {(perm[u], perm[v]): vec for (u, v), vec in g.edge_features.items()}
    return build_graph(g.num_nodes, edges, feats, efeats)
