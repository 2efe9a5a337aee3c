"""Random forest of CART trees grown on bootstrap samples with Gini impurity.

Trees are stored as flat arrays (``feature``, ``threshold``, ``left``,
``right``, ``counts``) so they serialize to plain JSON lists. A sample goes
left when ``x[feature] <= threshold``. Thresholds are observed training
values, never midpoints, which keeps predictions unchanged under any
strictly increasing per-column transform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..seeding import derive_rng

LEAF = -1


@dataclass
class Tree:
    feature: np.ndarray    # int, LEAF for leaves
    threshold: np.ndarray  # float
    left: np.ndarray       # int child index, LEAF for leaves
    right: np.ndarray
    counts: np.ndarray     # (n_nodes, 2) class counts of training samples reaching the node

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        idx = np.zeros(X.shape[0], dtype=int)
        active = self.feature[idx] != LEAF
        while np.any(active):
            rows = np.nonzero(active)[0]
            nodes = idx[rows]
            go_left = X[rows, self.feature[nodes]] <= self.threshold[nodes]
            idx[rows] = np.where(go_left, self.left[nodes], self.right[nodes])
            active = self.feature[idx] != LEAF
        return idx

    def predict(self, X: np.ndarray) -> np.ndarray:
        c = self.counts[self.apply(X)]
        # mixed leaves only arise from duplicate rows; ties go to Speech
        return (c[:, 1] >= c[:, 0]).astype(int)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": [float(v) for v in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        tree = cls(
            feature=np.asarray(d["feature"], dtype=int),
            threshold=np.asarray(d["threshold"], dtype=float),
            left=np.asarray(d["left"], dtype=int),
            right=np.asarray(d["right"], dtype=int),
            counts=np.asarray(d["counts"], dtype=int).reshape(-1, 2),
        )
        n = tree.feature.size
        if not (tree.threshold.size == tree.left.size == tree.right.size == tree.counts.shape[0] == n):
            raise ValueError("tree arrays differ in length")
        internal = tree.feature != LEAF
        if np.any(tree.left[internal] <= np.nonzero(internal)[0]) or np.any(tree.right[internal] >= n):
            raise ValueError("tree child indices out of range")
        return tree


def _best_split(x_col: np.ndarray, y: np.ndarray):
    """Lowest weighted Gini over thresholds between distinct consecutive values.

    Returns ``(impurity, threshold)`` or ``None`` when the column is constant.
    """
    order = np.argsort(x_col, kind="stable")
    xs = x_col[order]
    ys = y[order]
    n = xs.size
    valid = xs[:-1] < xs[1:]
    if not np.any(valid):
        return None
    n_left = np.arange(1, n)
    pos_left = np.cumsum(ys)[:-1]
    pos_total = pos_left[-1] + ys[-1]
    n_right = n - n_left
    pos_right = pos_total - pos_left
    p_l = pos_left / n_left
    p_r = pos_right / n_right
    gini_l = 2.0 * p_l * (1.0 - p_l)
    gini_r = 2.0 * p_r * (1.0 - p_r)
    weighted = (n_left * gini_l + n_right * gini_r) / n
    weighted = np.where(valid, weighted, np.inf)
    i = int(np.argmin(weighted))
    return float(weighted[i]), float(xs[i])


def grow_tree(X: np.ndarray, y: np.ndarray, max_features: int, rng: np.random.Generator,
              min_leaf: int = 1, max_depth: int | None = None) -> Tree:
    n_features = X.shape[1]
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(idx):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        n_pos = int(y[idx].sum())
        counts.append((idx.size - n_pos, n_pos))
        return len(feature) - 1

    root = new_node(np.arange(X.shape[0]))
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        n0, n1 = counts[node]
        if n0 == 0 or n1 == 0 or idx.size < 2 * min_leaf:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        # keep drawing features until max_features non-constant ones were examined
        best = None
        examined = 0
        for f in rng.permutation(n_features):
            split = _best_split(X[idx, f], y[idx])
            if split is None:
                continue
            examined += 1
            if best is None or split[0] < best[0]:
                best = (split[0], int(f), split[1])
            if examined >= max_features:
                break
        if best is None:
            continue
        _, f, thr = best
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        if li.size < min_leaf or ri.size < min_leaf:
            continue
        feature[node] = f
        threshold[node] = thr
        l_node = new_node(li)
        r_node = new_node(ri)
        left[node] = l_node
        right[node] = r_node
        stack.append((r_node, ri, depth + 1))
        stack.append((l_node, li, depth + 1))

    return Tree(
        feature=np.array(feature, dtype=int),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=int),
        right=np.array(right, dtype=int),
        counts=np.array(counts, dtype=int).reshape(-1, 2),
    )


def default_max_features(n_features: int) -> int:
    return max(1, math.ceil(math.sqrt(n_features)))


def bootstrap_indices(n_rows: int, seed: int, tree_index: int) -> np.ndarray:
    return derive_rng(seed, "rf-bootstrap", tree_index).integers(0, n_rows, n_rows)


def fit_forest(X: np.ndarray, y: np.ndarray, n_trees: int, max_features: int, seed: int,
               min_leaf: int = 1, max_depth: int | None = None) -> list[Tree]:
    trees = []
    for t in range(n_trees):
        idx = bootstrap_indices(X.shape[0], seed, t)
        rng = derive_rng(seed, "rf-split", t)
        trees.append(grow_tree(X[idx], y[idx], max_features, rng, min_leaf, max_depth))
    return trees


def forest_votes(trees: list[Tree], X: np.ndarray) -> np.ndarray:
    """Number of trees voting Speech for each row."""
    votes = np.zeros(X.shape[0], dtype=int)
    for tree in trees:
        votes += tree.predict(X)
    return votes


def predict_forest(trees: list[Tree], X: np.ndarray) -> np.ndarray:
    votes = forest_votes(trees, X)
    # 2 * votes >= n_trees: an even split goes to Speech
    return (2 * votes >= len(trees)).astype(int)
