"""Parameter-free walk-count constructions and the properties they recover.

"Cycle counts" here are closed-walk counts, Diag(A^k): the shift-and-append
message-passing recursion and adjacency powers both count walks, not simple
paths or simple cycles, and walks are the only reading consistent with the
recovery formulas below (see clustering_from_counts). All counting is exact
integer arithmetic; 64-bit overflow is detected and reported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import CapabilityError, InputError
from .graph import EgoNet, Graph

_INT64_LIMIT = np.int64(2**62)


@dataclass(frozen=True)
class CountMatrix:
    """Per-node walk counts to a designated identity node.

    ``counts[u][j-1]`` is the number of length-j walks from local node u to
    the identity node, j = 1..k_max. The identity node's own row is the
    closed-walk count vector Diag(A^j)[identity].
    """

    counts: np.ndarray
    identity_node: int
    k_max: int

    def identity_row(self) -> np.ndarray:
        return self.counts[self.identity_node]


def identity_walk_counts(ego: EgoNet, k: int) -> CountMatrix:
    """Walk counts to the identity node via k rounds of heterogeneous message
    passing with the explicit shift-and-append weights.

    Round 1 emits the constant 1 from the identity node and 0 elsewhere;
    later rounds shift each neighbor's count vector by one and inject the
    identity indicator into the first slot, summing over neighbors. Python
    integers keep the arithmetic exact.
    """
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    flags = [i for i, f in enumerate(ego.identity_mask) if f]
    if len(flags) != 1:
        raise InputError(
            f"ego must have exactly one identity node, found {len(flags)}"
        )
    identity = flags[0]
    g = ego.subgraph
    n = g.num_nodes
    # h[u] after round r holds (walks of length 1..r from u to identity)
    h: list[tuple[int, ...]] = [()] * n
    for rnd in range(1, k + 1):
        new_h = []
        for u in range(n):
            first = 0
            rest = [0] * (rnd - 1)
            for w in g.adjacency[u]:
                if w == identity:
                    first += 1
                hw = h[w]
                for j in range(rnd - 1):
                    rest[j] += hw[j]
            new_h.append((first, *rest))
        h = new_h
    if any(x >= 2**62 for row in h for x in row):
        raise CapabilityError(f"walk counts exceed the 64-bit integer range at k={k}")
    counts = np.array(h, dtype=np.int64).reshape(n, k)
    return CountMatrix(counts, identity, k)


def _adjacency_csr(g: Graph) -> sp.csr_matrix:
    n = g.num_nodes
    rows = []
    cols = []
    for u, v in g.edges:
        rows.extend((u, v))
        cols.extend((v, u))
    data = np.ones(len(rows), dtype=np.int64)
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n), dtype=np.int64)


def walk_count_features(g: Graph, k: int) -> np.ndarray:
    """Closed-walk counts Diag(A^j) for j = 1..k, one row per node.

    Computed by repeated sparse matrix products in int64; raises
    CapabilityError if a count could exceed the 64-bit range. Column 2 is
    the degree sequence and column 3 is twice the per-node triangle count.
    """
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    n = g.num_nodes
    out = np.zeros((n, k), dtype=np.int64)
    if n == 0 or g.num_edges == 0:
        return out
    adj = _adjacency_csr(g)
    max_deg = max(g.degrees())
    power = adj.copy()
    out[:, 0] = power.diagonal()
    for j in range(1, k):
        if power.data.size and power.data.max() > _INT64_LIMIT // max(max_deg, 1):
            raise CapabilityError(
                f"walk counts exceed the 64-bit integer range at length {j + 1}"
            )
        power = power @ adj
        out[:, j] = power.diagonal()
    return out


def clustering_from_counts(row) -> float:
    """Clustering coefficient recovered from a closed-walk count vector.

    Uses count(2) = degree and count(3) = 2 * triangles: the coefficient is
    count(3) / (count(2) * (count(2) - 1)), the executable form of the
    triangles-over-neighbor-pairs definition. Degenerate when degree < 2,
    where it is defined as 0.
    """
    row = [int(x) for x in row]
    if len(row) < 3:
        raise InputError(f"need counts up to length 3, got {len(row)}")
    deg = row[1]
    if deg < 2:
        return 0.0
    return row[2] / (deg * (deg - 1))


def clustering_direct(g: Graph, v: int) -> float:
    """Clustering coefficient by direct neighbor-pair edge counting."""
    nbrs = g.adjacency[v]
    deg = len(nbrs)
    if deg < 2:
        return 0.0
    nbr_set = set(nbrs)
    links = sum(1 for u in nbrs for w in g.adjacency[u] if w > u and w in nbr_set)
    return links / (deg * (deg - 1) / 2)


def mean_clustering(g: Graph) -> float:
    if g.num_nodes == 0:
        return 0.0
    return sum(clustering_direct(g, v) for v in range(g.num_nodes)) / g.num_nodes


def reachability(g: Graph, u: int, v: int, k: int) -> bool:
    """Whether the max-propagation flag from identity node v reaches u in k
    rounds: messages from v are the constant 1, everyone else forwards its
    previous value, and nodes take the max over incoming messages.

    For u != v this equals BFS reachability within k hops. The literal
    propagation makes a node self-reachable for k >= 2 exactly when it has a
    neighbor (the flag goes out and comes back), which differs from the
    "0 hops to itself" convention; callers that want shortest-path semantics
    should not query u == v.
    """
    if not 0 <= u < g.num_nodes or not 0 <= v < g.num_nodes:
        raise InputError("node id out of range")
    if k < 0:
        raise InputError(f"k must be nonnegative, got {k}")
    h = [0] * g.num_nodes
    for _ in range(k):
        new_h = [
            max((1 if s == v else h[s]) for s in g.adjacency[x]) if g.adjacency[x] else 0
            for x in range(g.num_nodes)
        ]
        h = new_h
    return bool(h[u])


def graph_signature(g: Graph, k: int) -> bytes:
    """Canonical byte signature: the sorted multiset of per-node closed-walk
    count rows. Equal for isomorphic graphs; refines as k grows."""
    feats = walk_count_features(g, k)
    rows = sorted(tuple(int(x) for x in row) for row in feats)
    body = ";".join(",".join(str(x) for x in row) for row in rows)
    return f"k={k};n={g.num_nodes};{body}".encode()


def augment_features(g: Graph, k: int) -> np.ndarray:
    """Node features with closed-walk count columns appended (as floats).

    Graphs without features get the count columns alone.
    """
    counts = walk_count_features(g, k).astype(np.float64)
    if g.node_features is None:
        return counts
    return np.concatenate([g.node_features, counts], axis=1)
