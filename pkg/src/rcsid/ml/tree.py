"""CART classification tree with Gini impurity and a minimum leaf size."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF = -1


@dataclass
class TreeState:
    """Flat node arrays; ``feature[i] == LEAF`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, n_classes) training class counts

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "counts")}

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=float),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["counts"], dtype=float).reshape(len(d["feature"]), -1),
        )

    def leaves(self):
        return np.flatnonzero(self.feature == LEAF)

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        X = np.atleast_2d(X)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature[node] != LEAF
        while np.any(active):
            idx = np.flatnonzero(active)
            f = self.feature[node[idx]]
            go_left = X[idx, f] <= self.threshold[node[idx]]
            node[idx] = np.where(go_left, self.left[node[idx]], self.right[node[idx]])
            active = self.feature[node] != LEAF
        return node

    def proba(self, X) -> np.ndarray:
        c = self.counts[self.apply(X)]
        return c / c.sum(axis=1, keepdims=True)


def _gini(counts, totals):
    p = counts / totals[:, None]
    return 1.0 - np.sum(p * p, axis=1)


def best_split(X, y, n_classes, min_leaf):
    """Best (feature, threshold, gain) over midpoints between distinct values, or None."""
    n = y.size
    parent = np.bincount(y, minlength=n_classes).astype(float)
    parent_imp = 1.0 - np.sum((parent / n) ** 2)
    best = None
    if n < 2 * min_leaf:
        return None
    onehot = np.eye(n_classes)[y]
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        left_counts = np.cumsum(onehot[order], axis=0)[:-1]
        n_left = np.arange(1, n, dtype=float)
        valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n - n_left >= min_leaf)
        if not np.any(valid):
            continue
        lc = left_counts[valid]
        nl = n_left[valid]
        rc = parent - lc
        nr = n - nl
        child = (nl * _gini(lc, nl) + nr * _gini(rc, nr)) / n
        gain = parent_imp - child
        k = int(np.argmax(gain))
        if gain[k] > 1e-12 and (best is None or gain[k] > best[2] + 1e-15):
            pos = np.flatnonzero(valid)[k]
            best = (f, 0.5 * (xs[pos] + xs[pos + 1]), float(gain[k]))
    return best


def grow_tree(X, y, n_classes, min_leaf_size=1) -> TreeState:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(idx):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        counts.append(np.bincount(y[idx], minlength=n_classes).astype(float))
        return len(feature) - 1

    root = new_node(np.arange(y.size))
    stack = [(root, np.arange(y.size))]
    while stack:
        node, idx = stack.pop()
        if np.count_nonzero(counts[node]) <= 1:
            continue
        split = best_split(X[idx], y[idx], n_classes, min_leaf_size)
        if split is None:
            continue
        f, thr, _ = split
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        ln, rn = new_node(li), new_node(ri)
        feature[node], threshold[node], left[node], right[node] = f, thr, ln, rn
        stack.append((rn, ri))
        stack.append((ln, li))
    return TreeState(
        np.array(feature, dtype=np.int64),
        np.array(threshold),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(counts).reshape(len(feature), n_classes),
    )
