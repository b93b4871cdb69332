import numpy as np
import pytest

from egoinf.cascade import (
    CascadeConfig,
    cascade_rounds,
    generate_dataset,
    independent_cascade,
)
from egoinf.errors import DataError
from egoinf.graphs import UndirectedGraph, validate_sample
from egoinf.rng import stream


def path_graph(n):
    return UndirectedGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


class TestIndependentCascade:
    def test_p_zero_keeps_only_seeds(self):
        g = path_graph(5)
        active = independent_cascade(g, [2], 0.0, stream(0, "ic"))
        assert active == {2}

    def test_p_one_floods_connected_graph(self):
        g = path_graph(6)
        active = independent_cascade(g, [0], 1.0, stream(1, "ic"))
        assert active == set(range(6))

    def test_far_end_probability_on_path(self):
        # seed -> middle -> end, each hop p=0.5: end active with prob 0.25
        g = path_graph(3)
        trials = 10_000
        hits = sum(
            2 in independent_cascade(g, [0], 0.5, stream(k, "mc")) for k in range(trials)
        )
        stderr = np.sqrt(0.25 * 0.75 / trials)
        assert abs(hits / trials - 0.25) <= 3 * stderr

    def test_rounds_are_bfs_layers_at_p_one(self):
        g = path_graph(4)
        rounds = cascade_rounds(g, [0], 1.0, stream(2, "ic"))
        np.testing.assert_array_equal(rounds, [0, 1, 2, 3])

    def test_inactive_nodes_marked_minus_one(self):
        g = UndirectedGraph.from_edges(4, [(0, 1), (2, 3)])
        rounds = cascade_rounds(g, [0], 1.0, stream(3, "ic"))
        assert rounds[2] == -1 and rounds[3] == -1


class TestGenerateDataset:
    def small_cfg(self, **kw):
        base = dict(graph_nodes=120, ws_k=8, seed_set_size=12, samples=40, n_target=12, seed=5)
        base.update(kw)
        return CascadeConfig(**base)

    def test_p_zero_rejected_as_single_class(self):
        with pytest.raises(DataError, match="degenerate"):
            generate_dataset(self.small_cfg(activation_p=0.0))

    def test_fixed_seed_reproduces_dataset(self):
        a = generate_dataset(self.small_cfg())
        b = generate_dataset(self.small_cfg())
        assert len(a.samples) == len(b.samples)
        for sa, sb in zip(a.samples, b.samples):
            assert sa.label == sb.label and sa.ego == sb.ego
            np.testing.assert_array_equal(sa.graph.adjacency, sb.graph.adjacency)
            np.testing.assert_array_equal(sa.influence_state, sb.influence_state)
        assert a.splits == b.splits

    def test_samples_pass_validation_and_share_n(self):
        ds = generate_dataset(self.small_cfg())
        for s in ds.samples:
            assert validate_sample(s) == []
            assert s.n == 12
            assert s.influence_state[s.ego] == 0  # ego inactive at observation

    def test_both_classes_present_with_reported_balance(self):
        ds = generate_dataset(self.small_cfg())
        pos = ds.metadata["positives"]
        neg = ds.metadata["negatives"]
        assert pos > 0 and neg > 0
        assert pos + neg == len(ds.samples)

    def test_splits_are_stratified_partition(self):
        ds = generate_dataset(self.small_cfg(samples=48))
        all_idx = sorted(i for part in ds.splits.values() for i in part)
        assert all_idx == sorted(set(all_idx))
        assert len(all_idx) == len(ds.samples)
        labels = [s.label for s in ds.samples]
        for part in ("valid", "test"):
            part_labels = [labels[i] for i in ds.splits[part]]
            assert 0 in part_labels and 1 in part_labels
