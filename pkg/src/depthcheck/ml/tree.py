"""Depth-limited binary decision trees shared by the boosted and bagged models.

A tree is a flat struct-of-arrays (feature, threshold, children, value),
which keeps prediction vectorized and serialization trivial. Splits are
exact: every boundary between distinct sorted feature values is scored,
thresholds are the left side's maximum value, so the partition rule
x <= threshold involves no floating midpoints. Ties always resolve to the
first candidate in scan order, which makes growth deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Tree:
    """Flat binary tree; feature == -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int32)
        feat = self.feature
        while True:
            f = feat[node]
            active = f >= 0
            if not active.any():
                break
            rows = np.nonzero(active)[0]
            cur = node[rows]
            go_left = X[rows, f[rows]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
        return self.value[node]

    def to_lists(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_lists(cls, doc: dict) -> "Tree":
        return cls(
            feature=np.asarray(doc["feature"], dtype=np.int32),
            threshold=np.asarray(doc["threshold"], dtype=np.float64),
            left=np.asarray(doc["left"], dtype=np.int32),
            right=np.asarray(doc["right"], dtype=np.int32),
            value=np.asarray(doc["value"], dtype=np.float64),
        )


def _split_gain_regression(xs: np.ndarray, g_sorted: np.ndarray, min_leaf: int):
    n = xs.size
    cuts = np.nonzero(xs[:-1] < xs[1:])[0]
    if cuts.size == 0:
        return None
    n_left = cuts + 1
    ok = (n_left >= min_leaf) & (n - n_left >= min_leaf)
    if not ok.any():
        return None
    cuts, n_left = cuts[ok], n_left[ok]
    csum = np.cumsum(g_sorted)
    total = csum[-1]
    left = csum[cuts]
    gain = left * left / n_left + (total - left) ** 2 / (n - n_left) - total * total / n
    b = int(np.argmax(gain))
    if gain[b] <= 1e-12:
        return None
    return float(gain[b]), float(xs[cuts[b]])


def _split_gain_gini(xs: np.ndarray, y_sorted: np.ndarray, min_leaf: int):
    n = xs.size
    cuts = np.nonzero(xs[:-1] < xs[1:])[0]
    if cuts.size == 0:
        return None
    n_left = cuts + 1
    ok = (n_left >= min_leaf) & (n - n_left >= min_leaf)
    if not ok.any():
        return None
    cuts, n_left = cuts[ok], n_left[ok]
    ones = np.cumsum(y_sorted)
    t1 = ones[-1]
    l1 = ones[cuts].astype(np.float64)
    l0 = n_left - l1
    r1 = t1 - l1
    r0 = (n - n_left) - r1
    parent = (t1 * t1 + (n - t1) ** 2) / n
    gain = (l1 * l1 + l0 * l0) / n_left + (r1 * r1 + r0 * r0) / (n - n_left) - parent
    b = int(np.argmax(gain))
    if gain[b] <= 1e-12:
        return None
    return float(gain[b]), float(xs[cuts[b]])


def grow_tree(
    X: np.ndarray,
    target: np.ndarray,
    max_depth: int,
    min_leaf: int,
    mode: str = "regression",
    hessian: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
    candidates_per_split: int | None = None,
) -> Tree:
    """Grow one tree.

    mode "regression": target is a gradient; leaves carry the step
    sum(gradient) / (sum(hessian) + eps). mode "gini": target holds 0/1
    labels; leaves carry the positive fraction. candidates_per_split, when
    given, draws that many distinct feature candidates per split from rng
    (the random-forest behavior); the drawn set is scanned in ascending
    index order so growth stays deterministic given the generator.
    """
    width = X.shape[1]
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def leaf_value(idx: np.ndarray) -> float:
        if mode == "regression":
            h = hessian[idx].sum() if hessian is not None else float(idx.size)
            return float(target[idx].sum() / (h + 1e-12))
        return float(target[idx].mean())

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(X.shape[0]), max_depth)]
    while stack:
        node_id, idx, depth_left = stack.pop()
        t = target[idx]
        pure = t.min() == t.max()
        if depth_left == 0 or idx.size < 2 * min_leaf or pure:
            value[node_id] = leaf_value(idx)
            continue
        if candidates_per_split is not None and rng is not None:
            cand = np.sort(rng.choice(width, size=min(candidates_per_split, width), replace=False))
        else:
            cand = np.arange(width)
        best = None
        for j in cand:
            xj = X[idx, j]
            order = np.argsort(xj, kind="stable")
            xs = xj[order]
            scorer = _split_gain_regression if mode == "regression" else _split_gain_gini
            got = scorer(xs, t[order], min_leaf)
            if got is not None and (best is None or got[0] > best[0]):
                best = (got[0], int(j), got[1])
        if best is None:
            value[node_id] = leaf_value(idx)
            continue
        _, j, th = best
        mask = X[idx, j] <= th
        li = new_node()
        ri = new_node()
        feature[node_id] = j
        threshold[node_id] = th
        left[node_id] = li
        right[node_id] = ri
        # push right first so the left branch is grown (and numbered) first
        stack.append((ri, idx[~mask], depth_left - 1))
        stack.append((li, idx[mask], depth_left - 1))
    return Tree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        value=np.asarray(value, dtype=np.float64),
    )
