"""Classical classifiers implemented from scratch for comparison runs:
label-frequency random guessing, brute-force k-nearest-neighbours, Gaussian
naive Bayes, a Gini CART tree and a bootstrap forest of such trees.

All prediction tie-breaks resolve to the lowest class value so runs are
reproducible across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "RandomGuessBaseline",
    "KnnBaseline",
    "NaiveBayesBaseline",
    "DecisionTreeBaseline",
    "RandomForestBaseline",
    "gini_impurity",
    "make_baseline",
]


def _check_fitted(obj, attr: str) -> None:
    if getattr(obj, attr, None) is None:
        raise RuntimeError(f"{type(obj).__name__} used before fit()")


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {X.shape}")
    return X


class RandomGuessBaseline:
    """Draws labels from the training label distribution."""

    def __init__(self, seed: int | Sequence[int] = 0):
        self.seed = seed
        self.classes_: np.ndarray | None = None
        self.probs_: np.ndarray | None = None

    def fit(self, X, y) -> "RandomGuessBaseline":
        y = np.asarray(y)
        if y.size == 0:
            raise ValueError("empty training labels")
        self.classes_, counts = np.unique(y, return_counts=True)
        self.probs_ = counts / counts.sum()
        self._rng = np.random.default_rng(self.seed)
        return self

    def predict(self, X) -> np.ndarray:
        _check_fitted(self, "probs_")
        n = _as_matrix(X).shape[0]
        return self._rng.choice(self.classes_, size=n, p=self.probs_)


class KnnBaseline:
    """Majority vote of the k nearest training rows (Euclidean).

    The distance matrix is computed in query chunks so memory stays flat on
    large training sets; the search itself is exact brute force.
    """

    def __init__(self, k: int = 5, chunk_size: int = 256):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self.chunk_size = chunk_size
        self.X_: np.ndarray | None = None

    def fit(self, X, y) -> "KnnBaseline":
        X = _as_matrix(X)
        y = np.asarray(y)
        if X.shape[0] == 0:
            raise ValueError("empty training set")
        if X.shape[0] < self.k:
            raise ValueError(f"k={self.k} exceeds {X.shape[0]} training rows")
        self.X_ = X
        self.classes_, self.y_idx_ = np.unique(y, return_inverse=True)
        return self

    def predict(self, X) -> np.ndarray:
        _check_fitted(self, "X_")
        Q = _as_matrix(X)
        if Q.shape[1] != self.X_.shape[1]:
            raise ValueError(f"query has {Q.shape[1]} features, trained on "
                             f"{self.X_.shape[1]}")
        train_sq = (self.X_**2).sum(axis=1)
        out = np.empty(Q.shape[0], dtype=self.classes_.dtype)
        for start in range(0, Q.shape[0], self.chunk_size):
            chunk = Q[start:start + self.chunk_size]
            # squared distances via the expansion |q-x|^2 = |q|^2 - 2qx + |x|^2
            d2 = (chunk**2).sum(axis=1)[:, None] - 2.0 * chunk @ self.X_.T + train_sq
            nearest = np.argpartition(d2, self.k - 1, axis=1)[:, : self.k]
            for i in range(chunk.shape[0]):
                votes = np.bincount(self.y_idx_[nearest[i]],
                                    minlength=len(self.classes_))
                out[start + i] = self.classes_[int(np.argmax(votes))]
        return out


class NaiveBayesBaseline:
    """Gaussian naive Bayes with a variance floor of 1e-9 per feature."""

    VAR_FLOOR = 1e-9

    def __init__(self):
        self.classes_: np.ndarray | None = None

    def fit(self, X, y) -> "NaiveBayesBaseline":
        X = _as_matrix(X)
        y = np.asarray(y)
        if X.shape[0] == 0:
            raise ValueError("empty training set")
        self.classes_ = np.unique(y)
        self.means_ = np.stack([X[y == c].mean(axis=0) for c in self.classes_])
        self.vars_ = np.maximum(
            np.stack([X[y == c].var(axis=0) for c in self.classes_]),
            self.VAR_FLOOR,
        )
        counts = np.array([(y == c).sum() for c in self.classes_], dtype=np.float64)
        self.log_priors_ = np.log(counts / counts.sum())
        return self

    def log_posterior(self, X) -> np.ndarray:
        """Unnormalized log posterior per class, shape [n, n_classes]."""
        _check_fitted(self, "classes_")
        X = _as_matrix(X)
        # sum of per-feature Gaussian log densities, vectorized over classes
        diff = X[:, None, :] - self.means_[None, :, :]
        ll = -0.5 * (np.log(2.0 * np.pi * self.vars_)[None, :, :]
                     + diff**2 / self.vars_[None, :, :]).sum(axis=2)
        return ll + self.log_priors_[None, :]

    def predict(self, X) -> np.ndarray:
        scores = self.log_posterior(X)
        return self.classes_[np.argmax(scores, axis=1)]


def gini_impurity(labels: np.ndarray) -> float:
    """1 - sum(p_c^2) over the label distribution."""
    labels = np.asarray(labels)
    if labels.size == 0:
        return 0.0
    _, counts = np.unique(labels, return_counts=True)
    p = counts / labels.size
    return float(1.0 - (p**2).sum())


@dataclass
class _TreeNode:
    feature: int = -1  # -1 marks a leaf
    threshold: float = 0.0
    left: "_TreeNode | None" = None
    right: "_TreeNode | None" = None
    label: int = 0


class DecisionTreeBaseline:
    """CART classifier: best Gini split over (feature, midpoint threshold).

    Split search is vectorized per feature with cumulative class counts.
    Ties between candidate splits resolve to the first feature considered
    and the lowest threshold, so a given seed always grows the same tree.
    """

    def __init__(
        self,
        max_depth: int | None = None,
        min_samples_split: int = 2,
        feature_subsample: int | None = None,
        seed: int | Sequence[int] = 0,
    ):
        self.max_depth = max_depth
        self.min_samples_split = max(2, min_samples_split)
        self.feature_subsample = feature_subsample
        self.seed = seed
        self.root_: _TreeNode | None = None

    def fit(self, X, y) -> "DecisionTreeBaseline":
        X = _as_matrix(X)
        y = np.asarray(y)
        if X.shape[0] == 0:
            raise ValueError("empty training set")
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        self._rng = np.random.default_rng(self.seed)
        self.root_ = self._grow(X, y_idx, depth=0)
        return self

    def _leaf(self, y_idx: np.ndarray) -> _TreeNode:
        votes = np.bincount(y_idx, minlength=len(self.classes_))
        return _TreeNode(label=int(self.classes_[int(np.argmax(votes))]))

    def _grow(self, X: np.ndarray, y_idx: np.ndarray, depth: int) -> _TreeNode:
        n = X.shape[0]
        if (
            n < self.min_samples_split
            or np.all(y_idx == y_idx[0])
            or (self.max_depth is not None and depth >= self.max_depth)
        ):
            return self._leaf(y_idx)

        if self.feature_subsample is not None and self.feature_subsample < X.shape[1]:
            features = np.sort(self._rng.choice(
                X.shape[1], size=self.feature_subsample, replace=False))
        else:
            features = np.arange(X.shape[1])

        best = None  # (weighted_gini, feature, threshold)
        k = len(self.classes_)
        for f in features:
            order = np.argsort(X[:, f], kind="stable")
            values = X[order, f]
            ordered = y_idx[order]
            # left_counts[i, c]: class-c rows among the first i+1 sorted rows
            one_hot = np.zeros((n, k))
            one_hot[np.arange(n), ordered] = 1.0
            left_counts = one_hot.cumsum(axis=0)
            total = left_counts[-1]
            # candidate cut after row i only where the value actually changes
            cuts = np.flatnonzero(values[:-1] < values[1:])
            if cuts.size == 0:
                continue
            nl = (cuts + 1).astype(np.float64)
            nr = n - nl
            lc = left_counts[cuts]
            rc = total[None, :] - lc
            gini_l = 1.0 - ((lc / nl[:, None]) ** 2).sum(axis=1)
            gini_r = 1.0 - ((rc / nr[:, None]) ** 2).sum(axis=1)
            weighted = (nl * gini_l + nr * gini_r) / n
            j = int(np.argmin(weighted))  # first minimum: lowest threshold
            candidate = (float(weighted[j]), int(f),
                         float((values[cuts[j]] + values[cuts[j] + 1]) / 2.0))
            if best is None or candidate[0] < best[0] - 1e-15:
                best = candidate

        if best is None:
            return self._leaf(y_idx)  # every considered feature is constant
        _, feature, threshold = best
        mask = X[:, feature] <= threshold
        node = _TreeNode(feature=feature, threshold=threshold)
        node.left = self._grow(X[mask], y_idx[mask], depth + 1)
        node.right = self._grow(X[~mask], y_idx[~mask], depth + 1)
        return node

    def predict(self, X) -> np.ndarray:
        _check_fitted(self, "root_")
        X = _as_matrix(X)
        out = np.empty(X.shape[0], dtype=np.int64)
        for i, row in enumerate(X):
            node = self.root_
            while node.feature >= 0:
                node = node.left if row[node.feature] <= node.threshold else node.right
            out[i] = node.label
        return out


class RandomForestBaseline:
    """Bootstrap ensemble of CART trees voting by majority.

    Defaults follow common practice: 100 trees, sqrt(d) features per split,
    unlimited depth. With one tree, no bootstrap and no feature subsampling
    it degenerates to the plain tree.
    """

    def __init__(
        self,
        n_trees: int = 100,
        max_depth: int | None = None,
        feature_subsample: "int | str | None" = "sqrt",
        bootstrap: bool = True,
        seed: int | Sequence[int] = 0,
    ):
        if n_trees < 1:
            raise ValueError("need at least one tree")
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.feature_subsample = feature_subsample
        self.bootstrap = bootstrap
        self.seed = seed
        self.trees_: list[DecisionTreeBaseline] | None = None

    def _subsample_size(self, d: int) -> int | None:
        if self.feature_subsample == "sqrt":
            return max(1, int(np.sqrt(d)))
        return self.feature_subsample

    def fit(self, X, y) -> "RandomForestBaseline":
        X = _as_matrix(X)
        y = np.asarray(y)
        if X.shape[0] == 0:
            raise ValueError("empty training set")
        self.classes_ = np.unique(y)
        base = list(self.seed) if isinstance(self.seed, (tuple, list)) else [int(self.seed)]
        self.trees_ = []
        for t in range(self.n_trees):
            rng = np.random.default_rng(base + [t])
            if self.bootstrap:
                rows = rng.integers(X.shape[0], size=X.shape[0])
                xt, yt = X[rows], y[rows]
            else:
                xt, yt = X, y
            tree = DecisionTreeBaseline(
                max_depth=self.max_depth,
                feature_subsample=self._subsample_size(X.shape[1]),
                seed=base + [t, 1],
            )
            self.trees_.append(tree.fit(xt, yt))
        return self

    def predict(self, X) -> np.ndarray:
        _check_fitted(self, "trees_")
        X = _as_matrix(X)
        votes = np.stack([tree.predict(X) for tree in self.trees_])
        out = np.empty(X.shape[0], dtype=np.int64)
        # vote over actual class values; offset to index bincount
        lo = int(self.classes_.min())
        width = int(self.classes_.max()) - lo + 1
        for i in range(X.shape[0]):
            counts = np.bincount(votes[:, i] - lo, minlength=width)
            out[i] = int(np.argmax(counts)) + lo
        return out


def make_baseline(kind: str, **params):
    """Factory keyed by the algorithm names used in reports and the CLI."""
    table = {
        "random": RandomGuessBaseline,
        "knn": KnnBaseline,
        "nb": NaiveBayesBaseline,
        "tree": DecisionTreeBaseline,
        "forest": RandomForestBaseline,
    }
    if kind not in table:
        raise ValueError(f"unknown baseline {kind!r}; expected one of {sorted(table)}")
    return table[kind](**params)
