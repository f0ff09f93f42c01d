"""Labeled, grouped feature matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, ShapeError


@dataclass(frozen=True)
class Dataset:
    """Rows of features with binary labels and a source group per row.

    Groups name where a row came from (one scene, one source reel); they
    drive leakage-free cross-validation splits and never enter training.
    """

    features: np.ndarray
    labels: np.ndarray
    groups: tuple[str, ...]

    def __post_init__(self) -> None:
        f = np.asarray(self.features, dtype=np.float64)
        if f.ndim != 2 or f.shape[0] == 0 or f.shape[1] == 0:
            raise ShapeError(f"features must be a non-empty 2-D matrix, got shape {f.shape}")
        if not np.isfinite(f).all():
            raise DomainError("features contain NaN or infinity")
        y = np.asarray(self.labels)
        if y.shape != (f.shape[0],):
            raise ShapeError(f"labels shape {y.shape} does not match {f.shape[0]} rows")
        if not np.isin(y, (0, 1)).all():
            raise DomainError("labels must be 0 or 1")
        groups = tuple(str(g) for g in self.groups)
        if len(groups) != f.shape[0]:
            raise ShapeError(f"{len(groups)} groups for {f.shape[0]} rows")
        if any(not g for g in groups):
            raise DomainError("group names must be non-empty")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "labels", y.astype(np.int64))
        object.__setattr__(self, "groups", groups)

    @property
    def rows(self) -> int:
        return self.features.shape[0]

    @property
    def width(self) -> int:
        return self.features.shape[1]

    def subset(self, mask: np.ndarray) -> "Dataset":
        mask = np.asarray(mask, dtype=bool)
        return Dataset(
            self.features[mask],
            self.labels[mask],
            tuple(g for g, keep in zip(self.groups, mask) if keep),
        )

    def group_names(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.groups)))


def canonical_order(features: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Row permutation sorting lexicographically by features, then label.

    Training on rows in this order makes every learner invariant to the
    caller's row order; ties are rows identical in every respect that
    matters, so their mutual order is irrelevant.
    """
    keys = [labels] + [features[:, j] for j in range(features.shape[1] - 1, -1, -1)]
    return np.lexsort(keys)
