"""Scoring and the grouped leave-one-out harness."""

import numpy as np
import pytest

from depthcheck.errors import DegenerateScoreError, FoldError
from depthcheck.evaluate import CvReport, f1_score, grouped_loo_cv
from depthcheck.ml import Dataset


class TestF1:
    def test_known_values(self):
        assert f1_score([1, 1, 0], [1, 0, 1]) == pytest.approx(0.5)
        assert f1_score([1, 1, 1, 0], [1, 1, 1, 0]) == 1.0
        assert f1_score([0, 0, 1], [1, 1, 0]) == 0.0
        # precision 2/3, recall 1, f1 = 0.8
        assert f1_score([1, 1, 1], [1, 1, 0]) == pytest.approx(0.8)

    def test_shape_and_label_validation(self):
        with pytest.raises(FoldError, match="equally long"):
            f1_score([1, 0], [1, 0, 1])
        with pytest.raises(FoldError, match="1-D"):
            f1_score(np.zeros((2, 2), dtype=int), np.zeros((2, 2), dtype=int))
        with pytest.raises(FoldError, match="must be 0 or 1"):
            f1_score([1, 2], [1, 0])
        with pytest.raises(FoldError, match="must be 0 or 1"):
            f1_score([1, 0], [1, -1])

    def test_all_negative_is_undefined(self):
        with pytest.raises(DegenerateScoreError):
            f1_score([0, 0, 0], [0, 0, 0])


class TestCvReport:
    def test_statistics(self):
        report = CvReport(fold_groups=("a", "b", "c"),
                          fold_scores=(1.0, 0.5, 0.75))
        assert report.mean_score == pytest.approx(0.75)
        assert report.score_std == pytest.approx(np.std([1.0, 0.5, 0.75]))

    def test_summary_text(self):
        report = CvReport(fold_groups=("a", "b"), fold_scores=(1.0, 0.5))
        text = report.summary()
        lines = text.splitlines()
        assert lines[0] == "a: 1.0000"
        assert lines[1] == "b: 0.5000"
        assert lines[-1].startswith("mean 0.7500 +/- 0.2500")
        assert text.endswith("(population std over folds)")


def _dataset(n_groups=4, per_group=6, seed=0):
    rng = np.random.default_rng(seed)
    rows, labels, groups = [], [], []
    for gi in range(n_groups):
        for k in range(per_group):
            label = k % 2
            rows.append(rng.normal(3.0 * label, 0.5, size=3))
            labels.append(label)
            groups.append(f"g{gi}")
    return Dataset(features=np.vstack(rows),
                   labels=np.asarray(labels, dtype=np.int64),
                   groups=tuple(groups))


def _threshold_trainer(train):
    # one-feature threshold rule, deliberately tiny
    cut = train.features[:, 0].mean()
    return lambda X: (X[:, 0] > cut).astype(np.int64)


class TestGroupedLoo:
    def test_visits_groups_in_sorted_order(self):
        ds = _dataset(n_groups=9)
        report = grouped_loo_cv(ds, _threshold_trainer)
        assert report.fold_groups == tuple(sorted(f"g{i}" for i in range(9)))
        assert len(report.fold_scores) == 9
        assert all(s == 1.0 for s in report.fold_scores)

    def test_row_order_is_irrelevant(self):
        ds = _dataset(seed=3)
        rng = np.random.default_rng(8)
        perm = rng.permutation(len(ds.labels))
        shuffled = Dataset(features=ds.features[perm],
                           labels=ds.labels[perm],
                           groups=tuple(ds.groups[i] for i in perm))
        a = grouped_loo_cv(ds, _threshold_trainer)
        b = grouped_loo_cv(shuffled, _threshold_trainer)
        assert a.fold_groups == b.fold_groups
        assert a.fold_scores == pytest.approx(b.fold_scores)

    def test_trainer_never_sees_held_group(self):
        ds = _dataset(n_groups=4)
        seen: list[set] = []

        def spy_trainer(train):
            seen.append(set(train.groups))
            return _threshold_trainer(train)

        report = grouped_loo_cv(ds, spy_trainer)
        for held, groups in zip(report.fold_groups, seen):
            assert held not in groups
            assert len(groups) == 3

    def test_needs_two_groups(self):
        ds = _dataset(n_groups=1)
        with pytest.raises(FoldError, match="need at least 2 groups"):
            grouped_loo_cv(ds, _threshold_trainer)

    def test_single_class_training_side_rejected(self):
        X = np.arange(12, dtype=np.float64).reshape(6, 2)
        labels = np.array([1, 1, 1, 1, 0, 0])
        groups = ("a", "a", "b", "b", "c", "c")
        ds = Dataset(features=X, labels=labels, groups=groups)
        # holding out "c" leaves only positives to train on
        with pytest.raises(FoldError, match="single-class"):
            grouped_loo_cv(ds, _threshold_trainer)

    def test_custom_scorer(self):
        ds = _dataset(n_groups=3)

        def accuracy(pred, truth):
            pred = np.asarray(pred)
            truth = np.asarray(truth)
            return float((pred == truth).mean())

        report = grouped_loo_cv(ds, _threshold_trainer, scorer=accuracy)
        assert all(s == 1.0 for s in report.fold_scores)
