import numpy as np
import pytest
from idgnn.counts import (
    augment_features,
    clustering_direct,
    clustering_from_counts,
    graph_signature,
    identity_walk_counts,
    reachability,
    walk_count_features,
)
from idgnn.errors import CapabilityError, InputError
from idgnn.graph import bfs_distances, build_graph, extract_ego, relabel_graph
from oracles import count_walks_brute, dense_power_diag, random_mixed_graphs, triangle_count_at

K3 = build_graph(3, [(0, 1), (1, 2), (0, 2)])
K2 = build_graph(2, [(0, 1)])
PAW = build_graph(4, [(0, 1), (1, 2), (0, 2), (0, 3)])  # hub 0, pendant 3
TWO_K3 = build_graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
C6 = build_graph(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)])


class TestIdentityWalkCounts:
    def test_triangle_rows(self):
        # frozen from the walk-enumeration oracle: identity row [0, 2, 2]
        # (A^2 = J + I, A^3 = 3J - I on K3), neighbor row [1, 1, 3]
        ego = extract_ego(K3, 0, 3)
        cm = identity_walk_counts(ego, 3)
        for j in range(1, 4):
            assert cm.counts[0, j - 1] == count_walks_brute(K3, 0, 0, j)
            assert cm.counts[1, j - 1] == count_walks_brute(K3, 1, 0, j)
        assert cm.identity_row().tolist() == [0, 2, 2]
        assert cm.counts[1].tolist() == [1, 1, 3]

    def test_isolated_node(self):
        g = build_graph(1, [])
        cm = identity_walk_counts(extract_ego(g, 0, 2), 4)
        assert cm.counts.tolist() == [[0, 0, 0, 0]]

    def test_single_edge_rows(self):
        # oracle-frozen: exactly one length-3 walk u -> v -> u -> v on K2,
        # so the non-identity row is [1, 0, 1] and the identity row [0, 1, 0]
        ego = extract_ego(K2, 1, 3)  # identity at node 1
        cm = identity_walk_counts(ego, 3)
        assert count_walks_brute(K2, 0, 1, 3) == 1
        assert cm.counts[0].tolist() == [1, 0, 1]
        assert cm.counts[1].tolist() == [0, 1, 0]

    def test_requires_exactly_one_identity(self):
        g = build_graph(4, [(0, 1), (1, 2), (2, 3)])
        ego = extract_ego(g, 0, 2, identity_at=3)  # outside ball: no identity
        with pytest.raises(InputError):
            identity_walk_counts(ego, 2)

    def test_full_matrix_vs_walk_enumeration(self):
        # counts[u][j] must equal the walk count on the ego subgraph
        for g in random_mixed_graphs(6, seed=13, max_n=10):
            for center in range(0, g.num_nodes, 3):
                ego = extract_ego(g, center, 4)
                cm = identity_walk_counts(ego, 4)
                identity = ego.identity_local_index
                for u in range(ego.subgraph.num_nodes):
                    for j in range(1, 5):
                        assert cm.counts[u, j - 1] == count_walks_brute(
                            ego.subgraph, u, identity, j
                        )


class TestWalkCountFeatures:
    def test_triangle(self):
        assert walk_count_features(K3, 3).tolist() == [[0, 2, 2]] * 3

    def test_triangle_free_third_column_zero(self):
        g = build_graph(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
        assert not walk_count_features(g, 3)[:, 2].any()

    def test_second_column_is_degree(self):
        for g in random_mixed_graphs(6, seed=4, max_n=25):
            feats = walk_count_features(g, 2)
            assert feats[:, 1].tolist() == g.degrees()

    def test_matches_dense_power_oracle(self):
        for g in random_mixed_graphs(9, seed=8, max_n=30):
            assert np.array_equal(walk_count_features(g, 6), dense_power_diag(g, 6))

    def test_matches_recursion_identity_row(self):
        for g in random_mixed_graphs(6, seed=3, max_n=20):
            feats = walk_count_features(g, 5)
            for v in range(g.num_nodes):
                cm = identity_walk_counts(extract_ego(g, v, 5), 5)
                assert feats[v].tolist() == cm.identity_row().tolist()

    def test_overflow_reported(self):
        n = 40
        kn = build_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])
        with pytest.raises(CapabilityError):
            walk_count_features(kn, 40)

    def test_k_validation(self):
        with pytest.raises(InputError):
            walk_count_features(K3, 0)


class TestClustering:
    def test_triangle_node(self):
        assert clustering_from_counts([0, 2, 2]) == 1.0
        assert clustering_direct(K3, 0) == 1.0

    def test_star_center(self):
        star = build_graph(4, [(0, 1), (0, 2), (0, 3)])
        assert clustering_from_counts([0, 3, 0]) == 0.0
        assert clustering_direct(star, 0) == 0.0

    def test_paw_hub(self):
        row = walk_count_features(PAW, 3)[0]
        assert row.tolist() == [0, 3, 2]
        assert clustering_from_counts(row) == pytest.approx(1 / 3)
        assert clustering_direct(PAW, 0) == pytest.approx(1 / 3)

    def test_k4(self):
        k4 = build_graph(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
        assert clustering_direct(k4, 0) == 1.0

    def test_path_center(self):
        p3 = build_graph(3, [(0, 1), (1, 2)])
        assert clustering_direct(p3, 1) == 0.0

    def test_degenerate_low_degree(self):
        assert clustering_from_counts([1, 1, 0]) == 0.0
        assert clustering_direct(K2, 0) == 0.0

    def test_counts_equal_direct_everywhere(self):
        # exact rational agreement between the two routes, all families
        for g in random_mixed_graphs(12, seed=17, max_n=35):
            feats = walk_count_features(g, 3)
            for v in range(g.num_nodes):
                got = clustering_from_counts(feats[v])
                want = clustering_direct(g, v)
                assert got == want
                # cross-check the direct route against raw triangle counts
                deg = g.degree(v)
                if deg >= 2:
                    assert want == triangle_count_at(g, v) / (deg * (deg - 1) / 2)


class TestReachability:
    def test_path_cases(self):
        p3 = build_graph(3, [(0, 1), (1, 2)])  # v=0, a=1, b=2
        assert reachability(p3, 2, 0, 2) is True
        assert reachability(p3, 2, 0, 1) is False

    def test_disconnected(self):
        g = build_graph(4, [(0, 1), (2, 3)])
        assert reachability(g, 2, 0, 10) is False

    def test_self_reachability_literal_semantics(self):
        g = build_graph(3, [(0, 1)])
        assert reachability(g, 0, 0, 2) is True  # has a neighbor
        assert reachability(g, 0, 0, 1) is False
        assert reachability(g, 2, 2, 5) is False  # isolated node

    def test_matches_bfs_oracle(self):
        for g in random_mixed_graphs(8, seed=23, max_n=20):
            for v in range(0, g.num_nodes, 3):
                for k in range(1, 7):
                    dist = bfs_distances(g, v, k)
                    for u in range(g.num_nodes):
                        if u == v:
                            continue
                        assert reachability(g, u, v, k) == (dist[u] is not None)


class TestSignature:
    def test_relabeling_invariance(self):
        rng = np.random.default_rng(2)
        for g in random_mixed_graphs(4, seed=29, max_n=20):
            sig = graph_signature(g, 5)
            for _ in range(25):
                perm = rng.permutation(g.num_nodes).tolist()
                assert graph_signature(relabel_graph(g, perm), 5) == sig

    def test_blind_pair_separated_at_k3(self):
        assert walk_count_features(TWO_K3, 3)[0].tolist() == [0, 2, 2]
        assert walk_count_features(C6, 3)[0].tolist() == [0, 2, 0]
        assert graph_signature(TWO_K3, 3) != graph_signature(C6, 3)

    def test_isomorphic_regular_pair_equal(self):
        from idgnn.generators import gen_d_regular

        g = gen_d_regular(16, 3, 4)
        h = relabel_graph(g, np.random.default_rng(0).permutation(16).tolist())
        assert graph_signature(g, 6) == graph_signature(h, 6)


def test_augment_features_widths():
    g = build_graph(3, [(0, 1), (1, 2)], node_features=[[1.0], [2.0], [3.0]])
    out = augment_features(g, 4)
    assert out.shape == (3, 5)
    bare = build_graph(3, [(0, 1), (1, 2)])
    assert augment_features(bare, 4).shape == (3, 4)
