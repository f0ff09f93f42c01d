"""Scoring and group-aware cross-validation.

Validation folds are built per source scene, never per row: every clip
rendered from one scene shares that scene's group name and moves between
train and test sides as a block. Anything else lets the models recognize
the scene instead of the artifact and inflates every score.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateScoreError, FoldError
from .ml.dataset import Dataset


def f1_score(predictions: Sequence[int], labels: Sequence[int]) -> float:
    """Harmonic mean of precision and recall for the positive class.

    Raises:
        DegenerateScoreError: no positives in labels and none predicted, so
            the score is undefined rather than silently 0 or 1.
    """
    p = np.asarray(predictions, dtype=np.int64)
    t = np.asarray(labels, dtype=np.int64)
    if t.shape != p.shape or t.ndim != 1:
        raise FoldError("predictions and labels must be 1-D and equally long")
    bad = set(np.unique(np.concatenate([t, p]))) - {0, 1}
    if bad:
        raise FoldError(f"labels must be 0 or 1, got {sorted(bad)}")
    tp = int(np.sum((t == 1) & (p == 1)))
    fp = int(np.sum((t == 0) & (p == 1)))
    fn = int(np.sum((t == 1) & (p == 0)))
    denom = 2 * tp + fp + fn
    if denom == 0:
        raise DegenerateScoreError("no positive labels and no positive predictions")
    return 2 * tp / denom


@dataclass(frozen=True)
class CvReport:
    """Per-fold scores from a grouped leave-one-out run."""

    fold_groups: tuple[str, ...]
    fold_scores: tuple[float, ...]

    @property
    def mean_score(self) -> float:
        return float(np.mean(self.fold_scores))

    @property
    def score_std(self) -> float:
        return float(np.std(self.fold_scores))

    def summary(self) -> str:
        lines = [
            f"{g}: {s:.4f}" for g, s in zip(self.fold_groups, self.fold_scores)
        ]
        lines.append(
            f"mean {self.mean_score:.4f} +/- {self.score_std:.4f}"
            " (population std over folds)"
        )
        return "\n".join(lines)


def grouped_loo_cv(
    dataset: Dataset,
    trainer: Callable[[Dataset], Callable[[np.ndarray], np.ndarray]],
    scorer: Callable[[Sequence[int], Sequence[int]], float] = f1_score,
) -> CvReport:
    """Hold out one group at a time; train on the rest, score the held fold.

    ``trainer`` gets the training subset and must return a predict
    function mapping a feature matrix to 0/1 labels. Folds run in sorted
    group order so repeated runs visit them identically.

    Raises:
        FoldError: fewer than 2 groups, or some training side is
            single-class (the trainer could not learn anything there).
    """
    groups = dataset.group_names()
    if len(groups) < 2:
        raise FoldError(f"need at least 2 groups for leave-one-out, got {len(groups)}")
    names: list[str] = []
    scores: list[float] = []
    for g in groups:
        held = np.array([x == g for x in dataset.groups])
        train = dataset.subset(~held)
        test = dataset.subset(held)
        if len(set(train.labels.tolist())) < 2:
            raise FoldError(f"training side for held-out group {g!r} is single-class")
        predict = trainer(train)
        predicted = np.asarray(predict(test.features), dtype=np.int64)
        names.append(g)
        scores.append(float(scorer(predicted.tolist(), test.labels.tolist())))
    return CvReport(fold_groups=tuple(names), fold_scores=tuple(scores))
