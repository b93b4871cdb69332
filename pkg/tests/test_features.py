import numpy as np
import pytest

from egoinf.deepwalk import deepwalk_embed, random_walks, skipgram_pairs
from egoinf.errors import ConfigError
from egoinf.features import DeepWalkConfig, FeatureStore, influence_features
from egoinf.graphs import EgoSample, UndirectedGraph
from egoinf.rng import stream
from egoinf.sampling import rwr_sample


def graph_from_edges(n, edges):
    return UndirectedGraph.from_edges(n, edges)


def make_sample(adj, ego=0, state=None, sid="s"):
    adj = np.asarray(adj, dtype=np.int8)
    n = adj.shape[0]
    return EgoSample(
        graph=UndirectedGraph(adj),
        ego=ego,
        influence_state=np.zeros(n, dtype=np.int8) if state is None else np.asarray(state),
        label=0,
        sample_id=sid,
    )


class TestRwrSample:
    def test_complete_graph_reaches_target(self):
        g = graph_from_edges(10, [(i, j) for i in range(10) for j in range(i + 1, 10)])
        out = rwr_sample(g, ego=3, n_target=5, rng=stream(0, "rwr"))
        assert out.graph.n == 5
        assert not out.truncated
        assert 3 in out.node_ids
        assert out.node_ids[out.ego] == 3

    def test_isolated_ego_returns_singleton_with_flag(self):
        g = graph_from_edges(4, [(1, 2)])
        out = rwr_sample(g, ego=0, n_target=3, rng=stream(1, "rwr"))
        assert out.graph.n == 1
        assert out.truncated

    def test_star_center_collects_leaves(self):
        g = graph_from_edges(6, [(0, i) for i in range(1, 6)])
        out = rwr_sample(g, ego=0, n_target=4, rng=stream(2, "rwr"))
        assert out.graph.n == 4
        assert 0 in out.node_ids
        # everything except the ego must be a leaf of the star
        for nid in out.node_ids:
            if nid != 0:
                assert 1 <= nid <= 5

    def test_induced_subgraph_preserves_edges(self):
        g = graph_from_edges(7, [(0, 1), (1, 2), (2, 3), (0, 4), (4, 5), (5, 6)])
        out = rwr_sample(g, ego=0, n_target=5, rng=stream(3, "rwr"))
        ids = out.node_ids
        for a in range(len(ids)):
            for b in range(len(ids)):
                assert out.graph.adjacency[a, b] == g.adjacency[ids[a], ids[b]]

    def test_requires_explicit_rng(self):
        g = graph_from_edges(3, [(0, 1)])
        with pytest.raises(ConfigError):
            rwr_sample(g, 0, 2)


class TestDeepwalk:
    def test_skipgram_pairs_window_one(self):
        assert set(skipgram_pairs(["a", "b", "c"], window=1)) == {
            ("a", "b"),
            ("b", "a"),
            ("b", "c"),
            ("c", "b"),
        }

    def test_walks_stay_on_edges(self):
        g = graph_from_edges(6, [(0, 1), (1, 2), (3, 4)])
        for walk in random_walks(g, 2, 8, stream(0, "w")):
            for a, b in zip(walk, walk[1:]):
                assert g.adjacency[a, b] == 1

    def test_same_stream_same_embeddings(self):
        g = graph_from_edges(8, [(i, (i + 1) % 8) for i in range(8)])
        e1 = deepwalk_embed(g, dim=6, walks_per_node=3, walk_length=10, rng=stream(5, "dw"))
        e2 = deepwalk_embed(g, dim=6, walks_per_node=3, walk_length=10, rng=stream(5, "dw"))
        np.testing.assert_array_equal(e1, e2)

    def test_disconnected_cliques_are_separable(self):
        edges = []
        for base in (0, 5):
            for i in range(5):
                for j in range(i + 1, 5):
                    edges.append((base + i, base + j))
        g = graph_from_edges(10, edges)
        emb = deepwalk_embed(
            g, dim=8, walks_per_node=8, walk_length=20, window=3,
            negatives=4, rng=stream(11, "dw"), epochs=6,
        )
        norm = emb / np.linalg.norm(emb, axis=1, keepdims=True)
        sim = norm @ norm.T
        intra, inter = [], []
        for i in range(10):
            for j in range(i + 1, 10):
                (intra if (i < 5) == (j < 5) else inter).append(sim[i, j])
        assert np.mean(intra) > np.mean(inter)

    def test_isolated_node_keeps_initialization(self):
        g = graph_from_edges(4, [(0, 1), (1, 2)])
        emb = deepwalk_embed(g, dim=4, walks_per_node=2, walk_length=6, rng=stream(7, "dw"))
        # node 3 never enters a walk pair: its row stays at the uniform init scale
        assert np.all(np.abs(emb[3]) <= 0.5 / 4 + 1e-12)


class TestInfluenceFeatures:
    def test_direct_construction(self):
        s = make_sample(np.zeros((3, 3)), ego=1, state=[1, 0, 0])
        np.testing.assert_array_equal(
            influence_features(s), [[1, 0], [0, 1], [0, 0]]
        )

    def test_zero_state_zero_column(self):
        s = make_sample(np.zeros((4, 4)), ego=2)
        feats = influence_features(s)
        np.testing.assert_array_equal(feats[:, 0], np.zeros(4))

    def test_exactly_one_ego_marker(self):
        for ego in range(5):
            s = make_sample(np.zeros((5, 5)), ego=ego, state=[1, 1, 0, 0, 1])
            feats = influence_features(s)
            assert feats[:, 1].sum() == 1
            assert feats[ego, 1] == 1


class TestFeatureStore:
    def test_bundle_widths_and_cache(self):
        s = make_sample([[0, 1], [1, 0]], sid="w")
        store = FeatureStore(0, DeepWalkConfig(dim=4, walks_per_node=2, walk_length=6))
        fb = store.bundle(s)
        assert fb.encoder_input.shape == (2, 6)
        assert fb.width == 6
        assert store.bundle(s) is fb

    def test_same_id_different_graph_not_conflated(self):
        a = make_sample([[0, 1], [1, 0]], sid="same")
        b = make_sample([[0, 0], [0, 0]], sid="same")
        store = FeatureStore(0, DeepWalkConfig(dim=4, walks_per_node=2, walk_length=6))
        fa, fb = store.bundle(a), store.bundle(b)
        assert not np.array_equal(fa.adjacency, fb.adjacency)
