"""Independent reference implementations used to freeze expected values.

Everything here is deliberately naive (exhaustive enumeration, dense matrix
powers, Floyd-Warshall) and shares no code with the package paths it checks.
"""

from __future__ import annotations

import numpy as np

from idgnn.generators import GeneratorSpec, child_seed, generate_one
from idgnn.graph import Graph


def count_walks_brute(g: Graph, start: int, end: int, length: int) -> int:
    """Number of length-`length` walks from start to end, by enumeration."""
    if length == 0:
        return int(start == end)
    total = 0
    frontier = [(start, 0)]
    while frontier:
        node, steps = frontier.pop()
        if steps == length:
            total += int(node == end)
            continue
        for w in g.adjacency[node]:
            frontier.append((w, steps + 1))
    return total


def dense_power_diag(g: Graph, k: int) -> np.ndarray:
    """Diag(A^j) for j = 1..k via dense integer matrix powers."""
    n = g.num_nodes
    A = np.zeros((n, n), dtype=np.int64)
    for u, v in g.edges:
        A[u, v] = 1
        A[v, u] = 1
    out = np.zeros((n, k), dtype=np.int64)
    P = np.eye(n, dtype=np.int64)
    for j in range(k):
        P = P @ A
        out[:, j] = np.diag(P)
    return out


def floyd_warshall(g: Graph) -> np.ndarray:
    n = g.num_nodes
    INF = np.iinfo(np.int64).max // 4
    D = np.full((n, n), INF, dtype=np.int64)
    np.fill_diagonal(D, 0)
    for u, v in g.edges:
        D[u, v] = 1
        D[v, u] = 1
    for m in range(n):
        D = np.minimum(D, D[:, m][:, None] + D[m, :][None, :])
    return D


def triangle_count_at(g: Graph, v: int) -> int:
    nbrs = g.adjacency[v]
    return sum(
        1
        for i, a in enumerate(nbrs)
        for b in nbrs[i + 1:]
        if g.has_edge(a, b)
    )


def random_mixed_graphs(count: int, seed: int, max_n: int = 40) -> list[Graph]:
    """Seeded graphs drawn across all three generator families."""
    graphs = []
    rng = np.random.default_rng(seed)
    families = ["d_regular", "small_world", "scale_free"]
    for i in range(count):
        family = families[i % 3]
        if family == "d_regular":
            n = int(rng.integers(8, max_n + 1))
            d = int(rng.integers(2, 6))
            if d >= n:
                d = 2
            if (n * d) % 2:
                n += 1
            spec = GeneratorSpec(family, min(n, max_n + 1), d)
        elif family == "small_world":
            n = int(rng.integers(8, max_n + 1))
            spec = GeneratorSpec(family, n, 4, float(rng.uniform(0, 0.5)))
        else:
            n = int(rng.integers(8, max_n + 1))
            m = int(rng.integers(1, 4))
            spec = GeneratorSpec(family, n, m, float(rng.uniform(0, 0.8)))
        graphs.append(generate_one(spec, child_seed(seed, i)))
    return graphs
