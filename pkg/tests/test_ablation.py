import numpy as np
import pytest

from egoinf.ablation import MetricsReport, RunRecord, run_ablation
from egoinf.augment import AugmentationConfig
from egoinf.cascade import CascadeConfig, generate_dataset
from egoinf.errors import ConfigError
from egoinf.features import DeepWalkConfig
from egoinf.training import AblationConfig, ModelConfig, TrainConfig

DATASET = generate_dataset(
    CascadeConfig(graph_nodes=90, ws_k=8, seed_set_size=10, samples=24, n_target=10, seed=3)
)


def tiny_config():
    return TrainConfig(
        epochs=2,
        lr=0.1,
        seed=100,
        pretrain_epochs=4,
        aug=AugmentationConfig(threshold=0.5, count=1),
        model=ModelConfig(variant="gcn", hidden=8, heads=2, embed_dim=4, gae_hidden=6),
        deepwalk=DeepWalkConfig(dim=6, walks_per_node=2, walk_length=8, window=2, negatives=2, epochs=1),
    )


class TestReportShape:
    def test_two_arms_two_runs(self):
        report = run_ablation(
            DATASET, tiny_config(), [AblationConfig.from_arm(1), AblationConfig.from_arm(2)], runs=2
        )
        assert len(report.records) == 4
        assert {r.arm for r in report.records} == {1, 2}
        for r in report.records:
            assert 0.0 <= r.auc <= 1.0
            assert 0.0 <= r.f1 <= 1.0
        assert len(report.summaries()) == 2
        deltas = report.paired_deltas(1)
        assert set(deltas) == {2}

    def test_duplicate_seeds_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            run_ablation(
                DATASET, tiny_config(), [AblationConfig.from_arm(1)], runs=2, seeds=[7, 7]
            )

    def test_empty_arm_list_rejected(self):
        with pytest.raises(ConfigError):
            run_ablation(DATASET, tiny_config(), [], runs=1)


class TestReportMath:
    def records(self):
        return [
            RunRecord(arm=1, run_seed=0, auc=0.6, f1=0.4),
            RunRecord(arm=1, run_seed=1, auc=0.7, f1=0.5),
            RunRecord(arm=8, run_seed=0, auc=0.8, f1=0.6),
            RunRecord(arm=8, run_seed=1, auc=0.9, f1=0.8),
        ]

    def test_summary_mean_and_std(self):
        report = MetricsReport(records=self.records())
        s1, s8 = report.summaries()
        assert s1.auc_mean == pytest.approx(0.65)
        assert s8.auc_mean == pytest.approx(0.85)
        assert s8.auc_std == pytest.approx(np.std([0.8, 0.9], ddof=1))

    def test_paired_deltas_use_matching_seeds(self):
        report = MetricsReport(records=self.records())
        deltas = report.paired_deltas(1)
        assert deltas[8]["auc_delta_mean"] == pytest.approx(0.2)
        assert deltas[8]["f1_delta_mean"] == pytest.approx(0.25)

    def test_table_renders_every_arm(self):
        text = MetricsReport(records=self.records()).table()
        assert "1 " in text and "8 " in text and "+/-" in text
