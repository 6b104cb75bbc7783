import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from idgnn.errors import InputError
from idgnn.graph import (
    bfs_distances,
    build_graph,
    extract_ego,
    induced_subgraph,
    relabel_graph,
)
from oracles import floyd_warshall


def edges_strategy(max_n=30):
    return st.integers(min_value=1, max_value=max_n).flatmap(
        lambda n: st.tuples(
            st.just(n),
            st.lists(
                st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)),
                max_size=3 * n,
            ),
        )
    )


class TestBuildGraph:
    def test_triangle(self):
        g = build_graph(3, [(0, 1), (1, 2), (0, 2)])
        assert g.degrees() == [2, 2, 2]
        assert g.edges == ((0, 1), (0, 2), (1, 2))

    def test_dedup_and_self_loop_removal(self):
        g = build_graph(3, [(0, 1), (1, 0), (2, 2)])
        assert g.edges == ((0, 1),)
        assert g.degree(2) == 0

    def test_out_of_range_endpoint(self):
        with pytest.raises(InputError):
            build_graph(4, [(0, 5)])

    def test_feature_row_mismatch(self):
        with pytest.raises(InputError):
            build_graph(3, [(0, 1)], node_features=[[1.0], [2.0]])

    def test_features_are_read_only(self):
        g = build_graph(2, [(0, 1)], node_features=[[1.0], [2.0]])
        with pytest.raises(ValueError):
            g.node_features[0, 0] = 5.0

    @given(edges_strategy())
    @settings(max_examples=60)
    def test_adjacency_symmetric_and_sorted(self, data):
        n, edges = data
        g = build_graph(n, edges)
        for v in range(n):
            assert list(g.adjacency[v]) == sorted(set(g.adjacency[v]))
            for w in g.adjacency[v]:
                assert v in g.adjacency[w]
                assert w != v


class TestBfs:
    def test_path_with_cap(self):
        g = build_graph(4, [(0, 1), (1, 2), (2, 3)])
        assert bfs_distances(g, 0, 2) == [0, 1, 2, None]

    def test_triangle(self):
        g = build_graph(3, [(0, 1), (1, 2), (0, 2)])
        assert bfs_distances(g, 0, 5) == [0, 1, 1]

    def test_disconnected(self):
        g = build_graph(4, [(0, 1), (2, 3)])
        dist = bfs_distances(g, 0, 10)
        assert dist[2] is None and dist[3] is None

    def test_bad_source(self):
        g = build_graph(2, [(0, 1)])
        with pytest.raises(InputError):
            bfs_distances(g, 5, 1)

    @given(edges_strategy())
    @settings(max_examples=40)
    def test_matches_floyd_warshall(self, data):
        n, edges = data
        g = build_graph(n, edges)
        D = floyd_warshall(g)
        INF = np.iinfo(np.int64).max // 4
        for s in range(0, n, max(1, n // 4)):
            dist = bfs_distances(g, s, n)
            for v in range(n):
                expect = None if D[s, v] >= INF else int(D[s, v])
                assert dist[v] == expect


class TestEgo:
    def test_path_center(self):
        g = build_graph(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
        ego = extract_ego(g, 2, 1)
        assert ego.to_parent == (1, 2, 3)
        assert ego.subgraph.edges == ((0, 1), (1, 2))
        assert ego.identity_mask == (False, True, False)
        assert ego.center_local_index == 1

    def test_whole_triangle(self):
        g = build_graph(3, [(0, 1), (1, 2), (0, 2)])
        ego = extract_ego(g, 0, 1)
        assert ego.to_parent == (0, 1, 2)
        assert ego.subgraph.num_edges == 3
        assert ego.identity_mask == (True, False, False)

    def test_conditioning_node_outside_ball(self):
        # dist(0, 3) = 3 > k = 2, so node 3 is outside and the mask is empty
        g = build_graph(4, [(0, 1), (1, 2), (2, 3)])
        ego = extract_ego(g, 0, 2, identity_at=3)
        assert ego.to_parent == (0, 1, 2)
        assert ego.identity_mask == (False, False, False)
        assert ego.identity_local_index is None

    def test_conditioning_node_inside_ball(self):
        g = build_graph(4, [(0, 1), (1, 2), (2, 3)])
        ego = extract_ego(g, 0, 2, identity_at=2)
        assert ego.identity_mask == (False, False, True)

    def test_invalid_ids(self):
        g = build_graph(3, [(0, 1)])
        with pytest.raises(InputError):
            extract_ego(g, 7, 1)
        with pytest.raises(InputError):
            extract_ego(g, 0, 1, identity_at=9)

    def test_features_sliced(self):
        feats = [[1.0], [2.0], [3.0], [4.0]]
        g = build_graph(4, [(0, 1), (1, 2), (2, 3)], node_features=feats)
        ego = extract_ego(g, 1, 1)
        assert ego.subgraph.node_features.ravel().tolist() == [1.0, 2.0, 3.0]

    @given(edges_strategy(max_n=50), st.integers(0, 49), st.integers(0, 4))
    @settings(max_examples=60)
    def test_ego_closure(self, data, center, k):
        n, edges = data
        center %= n
        g = build_graph(n, edges)
        ego = extract_ego(g, center, k)
        ball = set(ego.to_parent)
        dist = bfs_distances(g, center, k)
        assert ball == {v for v in range(n) if dist[v] is not None}
        # induced property: every parent edge inside the ball appears
        local = {p: i for i, p in enumerate(ego.to_parent)}
        expected = {
            (local[u], local[v]) for u, v in g.edges if u in ball and v in ball
        }
        assert set(ego.subgraph.edges) == expected


def test_induced_subgraph_keeps_order():
    g = build_graph(5, [(0, 2), (2, 4), (1, 4)])
    sub, parents = induced_subgraph(g, [4, 0, 2])
    assert parents == (0, 2, 4)
    assert sub.edges == ((0, 1), (1, 2))


def test_relabel_roundtrip():
    g = build_graph(4, [(0, 1), (1, 2), (2, 3)], node_features=[[0.0], [1.0], [2.0], [3.0]])
    perm = [2, 0, 3, 1]
    h = relabel_graph(g, perm)
    assert h.num_edges == g.num_edges
    assert sorted(h.degrees()) == sorted(g.degrees())
    # features follow their nodes
    for v in range(4):
        assert h.node_features[perm[v], 0] == g.node_features[v, 0]
