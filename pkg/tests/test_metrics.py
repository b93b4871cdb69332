import numpy as np
import pytest

from egoinf.errors import DataError
from egoinf.metrics import auc, f1


def oracle_auc(scores, labels):
    """All-pairs comparison: P(pos > neg) + 0.5 P(tie)."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                total += 1.0
            elif p == n:
                total += 0.5
    return total / (len(pos) * len(neg))


class TestAuc:
    def test_perfect_separation(self):
        assert auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0

    def test_known_concordance_value(self):
        assert auc([0.9, 0.8, 0.3, 0.1], [1, 0, 1, 0]) == pytest.approx(0.75)

    def test_all_ties_is_half(self):
        assert auc([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0]) == pytest.approx(0.5)

    def test_single_class_rejected(self):
        with pytest.raises(DataError):
            auc([0.1, 0.9], [1, 1])

    def test_matches_pairwise_oracle_on_random_vectors(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n = int(rng.integers(4, 24))
            labels = rng.integers(0, 2, size=n)
            if labels.sum() in (0, n):
                labels[0] = 1 - labels[0]
            # quantized scores force plenty of ties
            scores = np.round(rng.random(n), 1)
            assert auc(scores, labels) == pytest.approx(
                oracle_auc(scores.tolist(), labels.tolist()), abs=1e-12
            )


class TestF1:
    def test_perfect_prediction(self):
        assert f1([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0]) == 1.0

    def test_no_predicted_and_no_actual_positives_warns_zero(self):
        with pytest.warns(UserWarning):
            assert f1([0.1, 0.2], [0, 0]) == 0.0

    def test_known_confusion_counts(self):
        # tp=1, fp=1, fn=1: precision = recall = 0.5
        assert f1([0.9, 0.8, 0.1], [1, 0, 1]) == pytest.approx(0.5)

    def test_cut_is_inclusive(self):
        assert f1([0.5], [1], cut=0.5) == 1.0
