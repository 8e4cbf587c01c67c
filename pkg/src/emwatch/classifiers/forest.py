"""Random forest: Gini-impurity CART trees over seeded bootstrap samples with
per-node feature subsampling. Scores are tree-vote fractions."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_LEAF = -1


@dataclass
class Tree:
    feature: list = field(default_factory=list)
    threshold: list = field(default_factory=list)
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    probs: list = field(default_factory=list)  # class distribution per node

    def add_node(self) -> int:
        self.feature.append(_LEAF)
        self.threshold.append(0.0)
        self.left.append(_LEAF)
        self.right.append(_LEAF)
        self.probs.append(None)
        return len(self.feature) - 1

    def predict_class(self, x: np.ndarray) -> int:
        node = 0
        while self.feature[node] != _LEAF:
            node = self.left[node] if x[self.feature[node]] < self.threshold[node] else self.right[node]
        return int(np.argmax(self.probs[node]))


def _class_probs(y: np.ndarray, n_classes: int) -> np.ndarray:
    return np.bincount(y, minlength=n_classes) / y.size


def _best_split(
    X: np.ndarray,
    y: np.ndarray,
    feat_ids: np.ndarray,
    n_classes: int,
    min_leaf: int,
):
    """Exhaustive threshold scan over the sampled features; returns
    (feature, threshold) of the lowest weighted Gini split or None."""
    n = y.size
    best = (np.inf, None, None)
    onehot = np.eye(n_classes)[y]
    for f in feat_ids:
        vals = X[:, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        prefix = np.cumsum(onehot[order], axis=0)  # (n, c)
        # candidate cuts between distinct adjacent values
        cuts = np.nonzero(sv[1:] > sv[:-1])[0] + 1  # left part sizes
        if cuts.size == 0:
            continue
        cuts = cuts[(cuts >= min_leaf) & (n - cuts >= min_leaf)]
        if cuts.size == 0:
            continue
        left_counts = prefix[cuts - 1]
        right_counts = prefix[-1] - left_counts
        nl = cuts.astype(np.float64)
        nr = n - nl
        gini_l = 1.0 - np.sum((left_counts / nl[:, None]) ** 2, axis=1)
        gini_r = 1.0 - np.sum((right_counts / nr[:, None]) ** 2, axis=1)
        weighted = (nl * gini_l + nr * gini_r) / n
        k = int(np.argmin(weighted))
        if weighted[k] < best[0]:
            thr = (sv[cuts[k] - 1] + sv[cuts[k]]) / 2.0
            best = (float(weighted[k]), int(f), float(thr))
    if best[1] is None:
        return None
    return best[1], best[2]


def _grow(
    tree: Tree,
    node: int,
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    depth: int,
    max_depth: int,
    min_leaf: int,
    n_sub_features: int,
    rng: np.random.Generator,
) -> None:
    tree.probs[node] = _class_probs(y, n_classes)
    if depth >= max_depth or y.size < 2 * min_leaf or np.unique(y).size == 1:
        return
    feat_ids = rng.permutation(X.shape[1])[:n_sub_features]
    split = _best_split(X, y, feat_ids, n_classes, min_leaf)
    if split is None:
        return
    f, thr = split
    mask = X[:, f] < thr
    tree.feature[node] = f
    tree.threshold[node] = thr
    left = tree.add_node()
    right = tree.add_node()
    tree.left[node] = left
    tree.right[node] = right
    _grow(tree, left, X[mask], y[mask], n_classes, depth + 1, max_depth, min_leaf, n_sub_features, rng)
    _grow(tree, right, X[~mask], y[~mask], n_classes, depth + 1, max_depth, min_leaf, n_sub_features, rng)


def fit_forest(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    n_trees: int,
    max_depth: int,
    min_samples_leaf: int,
    max_features_fraction: float,
    seed: int,
) -> list[Tree]:
    n, d = X.shape
    n_sub = max(1, int(round(max_features_fraction * d)))
    trees = []
    for child in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(child)
        bootstrap = rng.integers(0, n, n)
        tree = Tree()
        root = tree.add_node()
        _grow(
            tree, root, X[bootstrap], y[bootstrap], n_classes,
            depth=0, max_depth=max_depth, min_leaf=min_samples_leaf,
            n_sub_features=n_sub, rng=rng,
        )
        trees.append(tree)
    return trees


def forest_scores(trees: list[Tree], n_classes: int, X: np.ndarray) -> np.ndarray:
    """Fraction of trees voting each class; rows sum to 1."""
    votes = np.zeros((X.shape[0], n_classes))
    for tree in trees:
        for r in range(X.shape[0]):
            votes[r, tree.predict_class(X[r])] += 1.0
    return votes / len(trees)
