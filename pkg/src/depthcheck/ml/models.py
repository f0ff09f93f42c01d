"""The three learners and their averaging ensemble.

Everything trains through one entry point, train(kind, dataset, config),
which canonicalizes row order first so shuffled datasets give identical
models. Probabilities come back from predict_proba for every kind: the
support vector machine calibrates its margins with a sigmoid fitted on
out-of-fold decision values, boosted trees pass their score through the
logistic, the forest reports its positive-vote fraction, and the ensemble
averages its members.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..config import RunConfig
from ..errors import DegenerateLabelsError, DomainError, ShapeError
from .dataset import Dataset, canonical_order
from .tree import Tree, grow_tree

KINDS = ("svm", "gbm", "forest", "ensemble")


def _check_matrix(X: np.ndarray, width: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != width:
        raise ShapeError(f"expected rows of width {width}, got shape {X.shape}")
    return X


# --- support vector machine -------------------------------------------------


def _rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    d2 = (
        (A * A).sum(axis=1)[:, None]
        + (B * B).sum(axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2)


def _smo(K: np.ndarray, y: np.ndarray, c: float, tol: float, max_passes: int):
    """Sequential minimal optimization on a precomputed kernel.

    y is +-1. The partner index maximizes |E_i - E_j| (first index on
    ties), so the sweep is deterministic.
    """
    m = y.size
    alpha = np.zeros(m)
    b = 0.0
    fcache = np.zeros(m)  # sum_j alpha_j y_j K_ij, without b
    quiet_passes = 0
    updates = 0
    cap = 4000 * m
    while quiet_passes < max_passes and updates < cap:
        changed = 0
        for i in range(m):
            e_i = fcache[i] + b - y[i]
            if not (
                (y[i] * e_i < -tol and alpha[i] < c)
                or (y[i] * e_i > tol and alpha[i] > 0)
            ):
                continue
            errors = fcache + b - y
            j = int(np.argmax(np.abs(errors - e_i)))
            if j == i:
                continue
            e_j = errors[j]
            a_i, a_j = alpha[i], alpha[j]
            if y[i] != y[j]:
                lo, hi = max(0.0, a_j - a_i), min(c, c + a_j - a_i)
            else:
                lo, hi = max(0.0, a_i + a_j - c), min(c, a_i + a_j)
            if lo >= hi:
                continue
            eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
            if eta >= 0:
                continue
            a_j_new = min(max(a_j - y[j] * (e_i - e_j) / eta, lo), hi)
            if abs(a_j_new - a_j) < 1e-12:
                continue
            a_i_new = a_i + y[i] * y[j] * (a_j - a_j_new)
            d_i, d_j = a_i_new - a_i, a_j_new - a_j
            b1 = b - e_i - y[i] * d_i * K[i, i] - y[j] * d_j * K[i, j]
            b2 = b - e_j - y[i] * d_i * K[i, j] - y[j] * d_j * K[j, j]
            if 0 < a_i_new < c:
                b = b1
            elif 0 < a_j_new < c:
                b = b2
            else:
                b = 0.5 * (b1 + b2)
            alpha[i], alpha[j] = a_i_new, a_j_new
            fcache += (d_i * y[i]) * K[i] + (d_j * y[j]) * K[j]
            changed += 1
            updates += 1
        quiet_passes = quiet_passes + 1 if changed == 0 else 0
    return alpha, b


def _sigmoid_fit(decisions: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
    """Fit p(y=1 | d) = 1 / (1 + exp(a*d + b)) by penalized max likelihood."""
    prior1 = float(labels.sum())
    prior0 = float(labels.size - prior1)
    hi = (prior1 + 1.0) / (prior1 + 2.0)
    lo = 1.0 / (prior0 + 2.0)
    t = np.where(labels > 0, hi, lo)
    a, b = 0.0, math.log((prior0 + 1.0) / (prior1 + 1.0))
    eps = 1e-5
    sigma = 1e-12

    def objective(av: float, bv: float) -> float:
        f = decisions * av + bv
        pos = f >= 0
        out = np.empty_like(f)
        out[pos] = t[pos] * f[pos] + np.log1p(np.exp(-f[pos]))
        out[~pos] = (t[~pos] - 1.0) * f[~pos] + np.log1p(np.exp(f[~pos]))
        return float(out.sum())

    fval = objective(a, b)
    for _ in range(100):
        f = decisions * a + b
        pos = f >= 0
        p = np.empty_like(f)
        q = np.empty_like(f)
        ef = np.exp(-np.abs(f))
        p[pos] = ef[pos] / (1.0 + ef[pos])
        q[pos] = 1.0 / (1.0 + ef[pos])
        q[~pos] = ef[~pos] / (1.0 + ef[~pos])
        p[~pos] = 1.0 / (1.0 + ef[~pos])
        d1 = t - p
        d2 = p * q
        g1 = float((decisions * d1).sum())
        g2 = float(d1.sum())
        if abs(g1) < eps and abs(g2) < eps:
            break
        h11 = float((decisions * decisions * d2).sum()) + sigma
        h22 = float(d2.sum()) + sigma
        h21 = float((decisions * d2).sum())
        det = h11 * h22 - h21 * h21
        da = -(h22 * g1 - h21 * g2) / det
        db = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * da + g2 * db
        step = 1.0
        while step >= 1e-10:
            na, nb = a + step * da, b + step * db
            nf = objective(na, nb)
            if nf < fval + 1e-4 * step * gd:
                a, b, fval = na, nb, nf
                break
            step /= 2.0
        else:
            break
    return a, b


def _sigmoid_apply(decisions: np.ndarray, a: float, b: float) -> np.ndarray:
    f = decisions * a + b
    out = np.empty_like(f)
    pos = f >= 0
    out[pos] = np.exp(-f[pos]) / (1.0 + np.exp(-f[pos]))
    out[~pos] = 1.0 / (1.0 + np.exp(f[~pos]))
    return out


@dataclass
class SvmModel:
    """RBF margin machine with standardized inputs and sigmoid calibration."""

    kind: str = field(default="svm", init=False)
    width: int = 0
    mean: np.ndarray = None
    scale: np.ndarray = None
    gamma: float = 0.0
    support: np.ndarray = None
    dual: np.ndarray = None
    bias: float = 0.0
    sig_a: float = 0.0
    sig_b: float = 0.0
    config: dict = field(default_factory=dict)

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = _check_matrix(X, self.width)
        Z = (X - self.mean) / self.scale
        return _rbf_kernel(Z, self.support, self.gamma) @ self.dual + self.bias

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid_apply(self.decision(X), self.sig_a, self.sig_b)

    def to_doc(self) -> dict:
        return {
            "width": self.width,
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "gamma": self.gamma,
            "support": self.support.tolist(),
            "dual": self.dual.tolist(),
            "bias": self.bias,
            "sig_a": self.sig_a,
            "sig_b": self.sig_b,
            "config": self.config,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "SvmModel":
        m = cls(
            width=int(doc["width"]),
            gamma=float(doc["gamma"]),
            bias=float(doc["bias"]),
            sig_a=float(doc["sig_a"]),
            sig_b=float(doc["sig_b"]),
            config=dict(doc["config"]),
        )
        m.mean = np.asarray(doc["mean"], dtype=np.float64)
        m.scale = np.asarray(doc["scale"], dtype=np.float64)
        m.support = np.asarray(doc["support"], dtype=np.float64)
        m.dual = np.asarray(doc["dual"], dtype=np.float64)
        return m


def _train_svm(X: np.ndarray, y01: np.ndarray, config: RunConfig) -> SvmModel:
    cfg = config.svm
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    Z = (X - mean) / scale
    gamma = cfg.gamma if cfg.gamma > 0 else 1.0 / (Z.shape[1] * max(Z.var(), 1e-12))
    y = 2.0 * y01 - 1.0

    # out-of-fold decision values for the calibration fit
    folds = np.arange(Z.shape[0]) % cfg.sigmoid_folds
    oof = np.zeros(Z.shape[0])
    usable = True
    for k in range(cfg.sigmoid_folds):
        tr = folds != k
        if len(np.unique(y01[tr])) < 2 or not (~tr).any():
            usable = False
            break
        Ktr = _rbf_kernel(Z[tr], Z[tr], gamma)
        alpha, b = _smo(Ktr, y[tr], cfg.c, cfg.tol, cfg.max_passes)
        keep = alpha > 1e-12
        dec = _rbf_kernel(Z[~tr], Z[tr][keep], gamma) @ (alpha[keep] * y[tr][keep]) + b
        oof[~tr] = dec

    K = _rbf_kernel(Z, Z, gamma)
    alpha, b = _smo(K, y, cfg.c, cfg.tol, cfg.max_passes)
    keep = alpha > 1e-12
    if not keep.any():
        keep = np.ones_like(alpha, dtype=bool)
    if not usable:
        oof = K @ (alpha * y) + b  # in-sample fallback for tiny folds
    sig_a, sig_b = _sigmoid_fit(oof, y01)
    return SvmModel(
        width=X.shape[1],
        mean=mean,
        scale=scale,
        gamma=float(gamma),
        support=Z[keep],
        dual=alpha[keep] * y[keep],
        bias=float(b),
        sig_a=float(sig_a),
        sig_b=float(sig_b),
        config={"c": cfg.c, "gamma": cfg.gamma, "tol": cfg.tol,
                "max_passes": cfg.max_passes, "sigmoid_folds": cfg.sigmoid_folds},
    )


# --- gradient boosted trees -------------------------------------------------


def _logistic(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class GbmModel:
    """Boosted regression trees on logistic loss."""

    kind: str = field(default="gbm", init=False)
    width: int = 0
    base_score: float = 0.0
    learning_rate: float = 0.1
    trees: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = _check_matrix(X, self.width)
        score = np.full(X.shape[0], self.base_score)
        for tree in self.trees:
            score += self.learning_rate * tree.predict(X)
        return score

    def staged_decisions(self, X: np.ndarray):
        """Score after 0, 1, ... rounds; used to watch training loss."""
        X = _check_matrix(X, self.width)
        score = np.full(X.shape[0], self.base_score)
        yield score.copy()
        for tree in self.trees:
            score += self.learning_rate * tree.predict(X)
            yield score.copy()

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _logistic(self.decision(X))

    def to_doc(self) -> dict:
        return {
            "width": self.width,
            "base_score": self.base_score,
            "learning_rate": self.learning_rate,
            "trees": [t.to_lists() for t in self.trees],
            "config": self.config,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "GbmModel":
        return cls(
            width=int(doc["width"]),
            base_score=float(doc["base_score"]),
            learning_rate=float(doc["learning_rate"]),
            trees=[Tree.from_lists(t) for t in doc["trees"]],
            config=dict(doc["config"]),
        )


def _train_gbm(X: np.ndarray, y01: np.ndarray, config: RunConfig) -> GbmModel:
    cfg = config.gbm
    p0 = float(y01.mean())
    base = math.log(p0 / (1.0 - p0))
    score = np.full(X.shape[0], base)
    trees = []
    for _ in range(cfg.rounds):
        p = _logistic(score)
        grad = y01 - p
        hess = p * (1.0 - p)
        tree = grow_tree(X, grad, cfg.depth, cfg.min_leaf, mode="regression", hessian=hess)
        trees.append(tree)
        score += cfg.learning_rate * tree.predict(X)
    return GbmModel(
        width=X.shape[1],
        base_score=base,
        learning_rate=cfg.learning_rate,
        trees=trees,
        config={"rounds": cfg.rounds, "depth": cfg.depth,
                "learning_rate": cfg.learning_rate, "min_leaf": cfg.min_leaf},
    )


# --- random forest ----------------------------------------------------------


@dataclass
class ForestModel:
    """Bagged Gini trees; probability is the positive-vote fraction."""

    kind: str = field(default="forest", init=False)
    width: int = 0
    trees: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = _check_matrix(X, self.width)
        votes = np.zeros(X.shape[0])
        for tree in self.trees:
            votes += tree.predict(X) > 0.5
        return votes / len(self.trees)

    def to_doc(self) -> dict:
        return {
            "width": self.width,
            "trees": [t.to_lists() for t in self.trees],
            "config": self.config,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ForestModel":
        return cls(
            width=int(doc["width"]),
            trees=[Tree.from_lists(t) for t in doc["trees"]],
            config=dict(doc["config"]),
        )


def _train_forest(X: np.ndarray, y01: np.ndarray, config: RunConfig) -> ForestModel:
    cfg = config.forest
    m, width = X.shape
    candidates = max(1, int(math.isqrt(width)))
    seeds = np.random.SeedSequence(config.seed).spawn(cfg.trees)
    trees = []
    for t in range(cfg.trees):
        rng = np.random.default_rng(seeds[t])
        idx = rng.integers(0, m, size=m)
        trees.append(
            grow_tree(
                X[idx],
                y01[idx].astype(np.float64),
                cfg.depth,
                cfg.min_leaf,
                mode="gini",
                rng=rng,
                candidates_per_split=candidates,
            )
        )
    return ForestModel(
        width=width,
        trees=trees,
        config={"trees": cfg.trees, "depth": cfg.depth,
                "min_leaf": cfg.min_leaf, "seed": config.seed},
    )


# --- ensemble and the shared entry points -----------------------------------


@dataclass
class EnsembleModel:
    """Mean of member probabilities; members must agree on width."""

    kind: str = field(default="ensemble", init=False)
    width: int = 0
    members: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = _check_matrix(X, self.width)
        return np.mean([m.predict_proba(X) for m in self.members], axis=0)

    def to_doc(self) -> dict:
        return {
            "width": self.width,
            "members": [{"kind": m.kind, "doc": m.to_doc()} for m in self.members],
            "config": self.config,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "EnsembleModel":
        members = [_MODEL_TYPES[m["kind"]].from_doc(m["doc"]) for m in doc["members"]]
        return cls(width=int(doc["width"]), members=members, config=dict(doc["config"]))


Model = SvmModel | GbmModel | ForestModel | EnsembleModel

_MODEL_TYPES = {
    "svm": SvmModel,
    "gbm": GbmModel,
    "forest": ForestModel,
    "ensemble": EnsembleModel,
}


def train(kind: str, dataset: Dataset, config: RunConfig | None = None) -> Model:
    """Train one model kind (or the svm+gbm "ensemble") on a dataset.

    Raises:
        DomainError: unknown kind.
        DegenerateLabelsError: a single class in the labels.
    """
    if kind not in KINDS:
        raise DomainError(f"unknown model kind {kind!r}, expected one of {KINDS}")
    if config is None:
        config = RunConfig()
    if len(np.unique(dataset.labels)) < 2:
        raise DegenerateLabelsError("training needs both classes present")
    order = canonical_order(dataset.features, dataset.labels)
    X = dataset.features[order]
    y = dataset.labels[order].astype(np.float64)
    if kind == "svm":
        return _train_svm(X, y, config)
    if kind == "gbm":
        return _train_gbm(X, y, config)
    if kind == "forest":
        return _train_forest(X, y, config)
    members = [_train_svm(X, y, config), _train_gbm(X, y, config)]
    return EnsembleModel(
        width=X.shape[1],
        members=members,
        config={"members": ["svm", "gbm"]},
    )


def predict_proba(model: Model, features: np.ndarray) -> np.ndarray:
    """Probability of the positive (synthesized low bits) class per row."""
    return model.predict_proba(features)
