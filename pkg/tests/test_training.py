import itertools

import numpy as np
import pytest

from egoinf.ablation import run_arm
from egoinf.augment import AugmentationConfig, generate_augmentations
from egoinf.cascade import CascadeConfig, generate_dataset
from egoinf.errors import ConfigError
from egoinf.features import DeepWalkConfig, FeatureStore
from egoinf.training import (
    ARM_FLAGS,
    AblationConfig,
    JointModel,
    ModelConfig,
    TrainConfig,
    average_class1,
    predict,
    pretrain_augmenter,
    run_config_with_seed,
    train_joint,
)

TINY_DW = DeepWalkConfig(dim=6, walks_per_node=2, walk_length=10, window=2, negatives=2, epochs=1)
TINY_MODEL = ModelConfig(variant="gat", hidden=8, heads=2, embed_dim=4, gae_hidden=6)


def tiny_dataset():
    return generate_dataset(
        CascadeConfig(graph_nodes=90, ws_k=8, seed_set_size=10, samples=24, n_target=10, seed=3)
    )


def tiny_config(**kw):
    base = dict(
        epochs=3,
        lr=0.1,
        dropout=0.2,
        seed=0,
        pretrain_epochs=5,
        aug=AugmentationConfig(threshold=0.5, count=2),
        model=TINY_MODEL,
        deepwalk=TINY_DW,
    )
    base.update(kw)
    return TrainConfig(**base)


DATASET = tiny_dataset()


class TestArmTable:
    def test_all_eight_arms_map_uniquely(self):
        seen = set()
        for arm in range(1, 9):
            abl = AblationConfig.from_arm(arm)
            assert abl.arm_id == arm
            seen.add((abl.joint, abl.train_aug, abl.test_aug))
        assert len(seen) == 8

    def test_flag_semantics_of_key_arms(self):
        assert ARM_FLAGS[1] == (False, False, False)
        assert ARM_FLAGS[2] == (True, False, False)
        assert ARM_FLAGS[5] == (False, True, True)
        assert ARM_FLAGS[8] == (True, True, True)

    def test_bad_arm_rejected(self):
        with pytest.raises(ConfigError):
            AblationConfig.from_arm(9)


class TestTrainJoint:
    def test_zero_lr_freezes_parameters_and_trace(self):
        cfg = tiny_config(lr=0.0, dropout=0.0, epochs=4)
        cfg = run_config_with_seed(cfg, 1)
        store = FeatureStore(1, cfg.deepwalk)
        train = DATASET.split_samples("train")
        model = JointModel.create(cfg, feature_width=2 + cfg.deepwalk.dim, seed=1)
        before = {k: v.copy() for k, v in model.parameters().items()}
        _, trace = train_joint(model, train, cfg, AblationConfig.from_arm(2), store=store)
        for k, v in model.parameters().items():
            np.testing.assert_array_equal(v, before[k])
        losses = {round(r["loss"], 14) for r in trace}
        assert len(losses) == 1

    def test_train_aug_with_zero_count_matches_plain(self):
        train = DATASET.split_samples("train")
        traces = []
        for arm in (1, 3):  # same flags except train_aug
            cfg = run_config_with_seed(tiny_config(aug=AugmentationConfig(count=0)), 2)
            store = FeatureStore(2, cfg.deepwalk)
            abl = AblationConfig.from_arm(arm)
            vgae = (
                pretrain_augmenter(train, cfg, store, 2)
                if (abl.train_aug or abl.test_aug)
                else None
            )
            model = JointModel.create(cfg, feature_width=2 + cfg.deepwalk.dim, seed=2)
            _, trace = train_joint(model, train, cfg, abl, vgae=vgae, store=store)
            traces.append([r["loss"] for r in trace])
        assert traces[0] == traces[1]

    def test_augmented_labels_match_sources(self):
        cfg = run_config_with_seed(tiny_config(), 3)
        store = FeatureStore(3, cfg.deepwalk)
        train = DATASET.split_samples("train")
        vgae = pretrain_augmenter(train, cfg, store, 3)
        for s in train:
            fb = store.bundle(s)
            for aug in generate_augmentations(s, vgae, cfg.aug, features=fb.encoder_input):
                assert aug.label == s.label
                assert aug.ego == s.ego

    def test_loss_decreases_on_trainable_problem(self):
        cfg = run_config_with_seed(tiny_config(epochs=12, dropout=0.0, batch_size=8), 4)
        store = FeatureStore(4, cfg.deepwalk)
        train = DATASET.split_samples("train")
        model = JointModel.create(cfg, feature_width=2 + cfg.deepwalk.dim, seed=4)
        _, trace = train_joint(model, train, cfg, AblationConfig.from_arm(1), store=store)
        assert trace[-1]["loss"] < trace[0]["loss"]

    def test_empty_training_set_rejected(self):
        cfg = tiny_config()
        model = JointModel.create(cfg, feature_width=2 + cfg.deepwalk.dim, seed=0)
        with pytest.raises(ConfigError):
            train_joint(model, [], cfg, AblationConfig.from_arm(1))

    def test_divergence_names_epoch_and_sample(self):
        from egoinf.errors import DivergenceError

        cfg = run_config_with_seed(tiny_config(epochs=2), 6)
        store = FeatureStore(6, cfg.deepwalk)
        train = DATASET.split_samples("train")
        model = JointModel.create(cfg, feature_width=2 + cfg.deepwalk.dim, seed=6)
        model.gae.w0[...] = 1e200  # overflow in the first joint forward
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(DivergenceError, match=r"epoch 0, sample"):
                train_joint(model, train, cfg, AblationConfig.from_arm(2), store=store)


class TestAveraging:
    def test_constant_probabilities(self):
        assert average_class1([np.array([0.6, 0.4])] * 5) == pytest.approx(0.4)

    def test_two_path_mean(self):
        probs = [np.array([0.6, 0.4]), np.array([0.8, 0.2])]
        assert average_class1(probs) == pytest.approx(0.3)

    def test_order_invariance(self):
        rng = np.random.default_rng(0)
        raw = rng.random((5, 2))
        probs = [r / r.sum() for r in raw]
        base = average_class1(probs)
        for perm in itertools.permutations(range(5)):
            assert abs(average_class1([probs[i] for i in perm]) - base) <= 1e-15


class TestPredict:
    def setup_trained(self, arm, seed=5, count=2):
        cfg = run_config_with_seed(
            tiny_config(aug=AugmentationConfig(threshold=0.5, count=count)), seed
        )
        store = FeatureStore(seed, cfg.deepwalk)
        abl = AblationConfig.from_arm(arm)
        train = DATASET.split_samples("train")
        vgae = (
            pretrain_augmenter(train, cfg, store, seed)
            if (abl.train_aug or abl.test_aug)
            else None
        )
        model = JointModel.create(cfg, feature_width=2 + cfg.deepwalk.dim, seed=seed)
        train_joint(model, train, cfg, abl, vgae=vgae, store=store)
        return model, cfg, abl, vgae, store

    def test_zero_count_tta_equals_plain(self):
        model, cfg, abl, vgae, store = self.setup_trained(arm=4, count=0)
        plain = AblationConfig.from_arm(1)
        s = DATASET.split_samples("test")[0]
        assert predict(model, s, abl, vgae, cfg, store) == predict(
            model, s, plain, vgae, cfg, store
        )

    def test_tta_is_mean_over_variants(self):
        model, cfg, abl, vgae, store = self.setup_trained(arm=4, count=3)
        plain = AblationConfig.from_arm(1)
        s = DATASET.split_samples("test")[0]
        fb = store.bundle(s)
        variants = [s] + generate_augmentations(s, vgae, cfg.aug, features=fb.encoder_input)
        manual = np.mean([predict(model, v, plain, None, cfg, store) for v in variants])
        assert predict(model, s, abl, vgae, cfg, store) == pytest.approx(manual, abs=1e-15)

    def test_tta_without_augmenter_rejected(self):
        model, cfg, _, _, store = self.setup_trained(arm=1, count=2)
        abl = AblationConfig.from_arm(4)
        with pytest.raises(ConfigError):
            predict(model, DATASET.split_samples("test")[0], abl, None, cfg, store)


class TestDeterminismAndIsolation:
    def test_same_seed_reproduces_metrics_bitwise(self):
        cfg = tiny_config(epochs=2)
        recs = [run_arm(DATASET, cfg, AblationConfig.from_arm(8), seed=9) for _ in range(2)]
        assert recs[0] == recs[1]

    def test_arm1_ignores_supplied_augmenter(self):
        cfg = run_config_with_seed(tiny_config(epochs=2), 10)
        store = FeatureStore(10, cfg.deepwalk)
        abl = AblationConfig.from_arm(1)
        train = DATASET.split_samples("train")
        test = DATASET.split_samples("test")
        vgae = pretrain_augmenter(train, cfg, store, 10)
        model = JointModel.create(cfg, feature_width=2 + cfg.deepwalk.dim, seed=10)
        train_joint(model, train, cfg, abl, vgae=None, store=store)
        with_v = [predict(model, s, abl, vgae, cfg, store) for s in test]
        without = [predict(model, s, abl, None, cfg, store) for s in test]
        assert with_v == without

    def test_arm5_with_zero_count_equals_arm1(self):
        cfg = tiny_config(aug=AugmentationConfig(threshold=0.5, count=0), epochs=2)
        r1 = run_arm(DATASET, cfg, AblationConfig.from_arm(1), seed=11)
        r5 = run_arm(DATASET, cfg, AblationConfig.from_arm(5), seed=11)
        assert (r1.auc, r1.f1) == (r5.auc, r5.f1)
