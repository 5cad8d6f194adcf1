"""Random forest of CART trees, trained and evaluated with numpy.

Each tree is grown on a bootstrap resample; splits minimize Gini impurity
over a random ceil(sqrt(d)) feature subset, with thresholds at midpoints
between consecutive distinct values. Ties in impurity reduction break
toward the lowest feature index, then the lowest threshold, so training is
fully deterministic for a fixed seed. Leaf class distributions carry +1
Laplace smoothing so no class ever gets exact zero probability.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TrainingError
from .streams import rng_for

_EPS = 1e-12


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 128
    max_depth: int | None = None
    min_samples_leaf: int = 1
    features_per_split: int | None = None  # default ceil(sqrt(d))
    leaf_smoothing: float = 1.0  # additive smoothing of leaf class counts
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise TrainingError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise TrainingError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise TrainingError("min_samples_leaf must be >= 1")
        if self.leaf_smoothing < 0:
            raise TrainingError("leaf_smoothing must be >= 0")


def gini_impurity(counts: np.ndarray) -> float:
    """Gini impurity of a class-count vector."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - (p * p).sum())


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat array representation; feature -1 marks a leaf."""

    feature: np.ndarray  # (n_nodes,) int32
    threshold: np.ndarray  # (n_nodes,) float64
    left: np.ndarray  # (n_nodes,) int32
    right: np.ndarray  # (n_nodes,) int32
    dist: np.ndarray  # (n_nodes, n_classes) float64, rows sum to 1 at leaves

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int32)
        rows = np.arange(len(X))
        while True:
            feat = self.feature[node]
            inner = feat >= 0
            if not inner.any():
                break
            go_left = np.zeros(len(X), dtype=bool)
            go_left[inner] = (
                X[rows[inner], feat[inner]] <= self.threshold[node[inner]]
            )
            node = np.where(
                inner, np.where(go_left, self.left[node], self.right[node]), node
            )
        return self.dist[node]

    def to_payload(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "dist": self.dist.tolist(),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "Tree":
        return cls(
            feature=np.asarray(payload["feature"], dtype=np.int32),
            threshold=np.asarray(payload["threshold"], dtype=np.float64),
            left=np.asarray(payload["left"], dtype=np.int32),
            right=np.asarray(payload["right"], dtype=np.int32),
            dist=np.asarray(payload["dist"], dtype=np.float64),
        )


def _best_split(
    X: np.ndarray,
    y: np.ndarray,
    idx: np.ndarray,
    features: np.ndarray,
    n_classes: int,
    min_leaf: int,
    parent_gini: float,
) -> tuple[int, float, float] | None:
    """Best (feature, threshold, weighted_child_gini) or None if no valid split.

    Minimizing the weighted child Gini equals maximizing
    score(i) = |L|_i * (1 - gini_L) + |R|_i * (1 - gini_R)
             = sum_c l_c^2 / |L|_i + sum_c r_c^2 / |R|_i,
    with r_c = total_c - l_c, which avoids materializing right-side counts.
    """
    n = len(idx)
    y_node = y[idx]
    best = None
    best_decrease = 0.0
    onehot = np.zeros((n, n_classes), dtype=np.float64)
    onehot[np.arange(n), y_node] = 1.0
    left_n = np.arange(1, n, dtype=np.float64)
    right_n = n - left_n
    size_ok = (left_n >= min_leaf) & (right_n >= min_leaf)
    for f in features:
        v = X[idx, f]
        order = np.argsort(v)
        vs = v[order]
        valid = size_ok & (vs[:-1] < vs[1:])
        if not valid.any():
            continue
        cum = np.cumsum(onehot[order], axis=0)
        total = cum[-1]
        left_counts = cum[:-1]
        ssl = np.einsum("ij,ij->i", left_counts, left_counts)
        ssr = total @ total - 2.0 * (left_counts @ total) + ssl
        score = np.where(valid, ssl / left_n + ssr / right_n, -np.inf)
        i = int(np.argmax(score))  # first occurrence = lowest threshold
        weighted = 1.0 - score[i] / n
        decrease = parent_gini - weighted
        if decrease > best_decrease + _EPS or (best is None and decrease > _EPS):
            best_decrease = float(decrease)
            threshold = (vs[i] + vs[i + 1]) / 2.0
            best = (int(f), float(threshold), float(weighted))
    return best


def build_tree(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    cfg: ForestConfig,
    rng: np.random.Generator,
    sample: np.ndarray,
) -> Tree:
    """Grow one tree depth-first on the given sample of row indices."""
    d = X.shape[1]
    m = cfg.features_per_split or math.ceil(math.sqrt(d))
    m = min(m, d)

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    dist: list[np.ndarray] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        dist.append(None)  # type: ignore[arg-type]
        return len(feature) - 1

    root = new_node()
    stack = [(root, sample, 0)]
    while stack:
        node, idx, depth = stack.pop()
        counts = np.bincount(y[idx], minlength=n_classes).astype(np.float64)
        parent_gini = gini_impurity(counts)
        split = None
        if (
            parent_gini > 0.0
            and (cfg.max_depth is None or depth < cfg.max_depth)
            and len(idx) >= 2 * cfg.min_samples_leaf
        ):
            features = np.sort(rng.choice(d, size=m, replace=False))
            split = _best_split(
                X, y, idx, features, n_classes, cfg.min_samples_leaf, parent_gini
            )
        if split is None:
            dist[node] = (counts + cfg.leaf_smoothing) / (
                counts.sum() + cfg.leaf_smoothing * n_classes
            )
            continue
        f, thr, weighted = split
        assert weighted <= parent_gini + 1e-9, "split increased impurity"
        feature[node] = f
        threshold[node] = thr
        go_left = X[idx, f] <= thr
        left_id = new_node()
        right_id = new_node()
        left[node] = left_id
        right[node] = right_id
        # push right first so the left branch is processed (and draws RNG) first
        stack.append((right_id, idx[~go_left], depth + 1))
        stack.append((left_id, idx[go_left], depth + 1))

    dist_arr = np.zeros((len(feature), n_classes), dtype=np.float64)
    for i, row in enumerate(dist):
        if row is not None:
            dist_arr[i] = row
    return Tree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        dist=dist_arr,
    )


def fit_forest(X: np.ndarray, y: np.ndarray, n_classes: int, cfg: ForestConfig) -> list[Tree]:
    """Train cfg.n_trees trees, each on its own bootstrap and RNG stream."""
    if np.isnan(X).any():
        raise TrainingError("training features contain NaN values")
    X = np.asfortranarray(X)  # column gathers dominate split search
    trees = []
    n = len(X)
    for t in range(cfg.n_trees):
        rng = rng_for(cfg.seed, "tree", t)
        sample = np.sort(rng.integers(0, n, size=n))
        trees.append(build_tree(X, y, n_classes, cfg, rng, sample))
    return trees


def forest_predict_matrix(trees: list[Tree], X: np.ndarray) -> np.ndarray:
    """Mean of per-tree leaf distributions; rows sum to 1."""
    out = np.zeros((len(X), trees[0].dist.shape[1]), dtype=np.float64)
    for tree in trees:
        out += tree.predict_matrix(X)
    return out / len(trees)
