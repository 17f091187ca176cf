"""Random forest classifier built from scratch on Gini impurity.

Each tree trains on a bootstrap resample (with replacement, same size)
and searches splits over a fresh random subset of ceil(sqrt(d)) features
per node; candidate thresholds are midpoints between consecutive sorted
unique values.  Nodes grow until pure or below ``min_samples_split``.
Ties (equal Gini, equal votes) always resolve to the lowest index so
that results are a pure function of (data, hyperparameters, seed).

The split search walks each candidate feature in sorted order while
maintaining left/right class counts and their sums of squares
incrementally, so scoring a feature is O(m log m) for the sort plus
O(m) for the scan.  The kernel is compiled with numba when available
(a pure-Python fallback keeps the package importable without it).

Per-tree randomness derives from (seed, tree index), never from shared
state, so training is reproducible under any scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from har_kit.errors import DataError
from har_kit.rng import substream
from har_kit.serialize import read_header, savez_stable

FOREST_FORMAT = "har-kit.forest"
FOREST_VERSION = 1

_MASK = 0xFFFFFFFFFFFFFFFF


def _grow_tree_impl(X, y, n_classes, idx, max_depth, min_samples_split, max_features, seed):
    """Grow one tree over the rows ``idx``; returns packed node arrays.

    Nodes are stored as parallel arrays: feature (-1 for leaves),
    threshold, left/right child ids, and the per-node class histogram.
    """
    n = idx.shape[0]
    d = X.shape[1]
    cap = 2 * n + 1

    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    counts = np.zeros((cap, n_classes), np.int64)

    work = idx.copy()
    buf = np.empty(n, np.int64)
    perm = np.empty(d, np.int64)

    # stack of (node, start, end, depth)
    stack = np.empty((cap, 4), np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1
    n_nodes = 1

    state = np.uint64(seed)

    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        m = end - start

        hist = counts[node]
        for i in range(start, end):
            hist[y[work[i]]] += 1

        max_count = 0
        sumsq_total = 0.0
        for c in range(n_classes):
            h = hist[c]
            sumsq_total += float(h) * float(h)
            if h > max_count:
                max_count = h
        pure = max_count == m

        if pure or m < min_samples_split or (max_depth >= 0 and depth >= max_depth):
            continue

        # Draw features in random order; constant features do not count
        # toward the max_features budget, so a split is found whenever
        # any feature varies on this node.
        for j in range(d):
            perm[j] = j
        for j in range(d - 1, 0, -1):
            state = (state + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(_MASK)
            z = state
            z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(_MASK)
            z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(_MASK)
            z = z ^ (z >> np.uint64(31))
            k = int(z % np.uint64(j + 1))
            tmp = perm[j]
            perm[j] = perm[k]
            perm[k] = tmp

        best_score = -1.0
        best_feat = -1
        best_thr = 0.0
        evaluated = 0

        left_cnt = np.zeros(n_classes, np.int64)
        right_cnt = np.zeros(n_classes, np.int64)

        for j in range(d):
            if evaluated >= max_features:
                break
            f = perm[j]
            vals = np.empty(m, np.float64)
            for i in range(m):
                vals[i] = X[work[start + i], f]
            order = np.argsort(vals, kind="mergesort")

            lo = vals[order[0]]
            hi = vals[order[m - 1]]
            if lo == hi:
                continue
            evaluated += 1

            for c in range(n_classes):
                left_cnt[c] = 0
                right_cnt[c] = hist[c]
            sumsq_l = 0.0
            sumsq_r = sumsq_total

            f_best_score = -1.0
            f_best_thr = 0.0
            for i in range(m - 1):
                c = y[work[start + order[i]]]
                sumsq_l += 2.0 * float(left_cnt[c]) + 1.0
                left_cnt[c] += 1
                sumsq_r -= 2.0 * float(right_cnt[c]) - 1.0
                right_cnt[c] -= 1
                v0 = vals[order[i]]
                v1 = vals[order[i + 1]]
                if v0 < v1:
                    score = sumsq_l / float(i + 1) + sumsq_r / float(m - i - 1)
                    if score > f_best_score:
                        f_best_score = score
                        f_best_thr = v0 + 0.5 * (v1 - v0)
            if f_best_score > best_score or (f_best_score == best_score and f < best_feat):
                best_score = f_best_score
                best_feat = f
                best_thr = f_best_thr

        if best_feat < 0:
            continue  # every drawn feature constant: leaf

        n_left = 0
        for i in range(start, end):
            if X[work[i], best_feat] <= best_thr:
                n_left += 1
        pos_l = 0
        pos_r = n_left
        for i in range(start, end):
            if X[work[i], best_feat] <= best_thr:
                buf[pos_l] = work[i]
                pos_l += 1
            else:
                buf[pos_r] = work[i]
                pos_r += 1
        for i in range(m):
            work[start + i] = buf[i]

        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        feature[node] = best_feat
        threshold[node] = best_thr
        left[node] = left_id
        right[node] = right_id

        stack[top, 0] = left_id
        stack[top, 1] = start
        stack[top, 2] = start + n_left
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = right_id
        stack[top, 1] = start + n_left
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1

    return (
        feature[:n_nodes],
        threshold[:n_nodes],
        left[:n_nodes],
        right[:n_nodes],
        counts[:n_nodes],
    )


try:  # pragma: no cover - exercised implicitly
    from numba import njit

    _grow_tree = njit(cache=True)(_grow_tree_impl)
except ImportError:  # pragma: no cover
    _grow_tree = _grow_tree_impl


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    max_features: Union[int, str] = "sqrt"  # ceil(sqrt(d))
    bootstrap: bool = True

    def resolve_max_features(self, d: int) -> int:
        if self.max_features == "sqrt":
            return int(np.ceil(np.sqrt(d)))
        k = int(self.max_features)
        if k < 1:
            raise DataError(f"max_features must be >= 1, got {k}")
        return min(k, d)

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "max_features": self.max_features,
            "bootstrap": self.bootstrap,
        }


@dataclass
class DecisionTree:
    """One trained tree as parallel node arrays."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # [n_nodes, n_classes]

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def leaf_ids(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.flatnonzero(self.feature[node] >= 0)
        while len(rows):
            cur = node[rows]
            go_left = X[rows, self.feature[cur]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
            rows = rows[self.feature[node[rows]] >= 0]
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        leaves = self.leaf_ids(X)
        return self.counts[leaves].argmax(axis=1)


@dataclass
class Forest:
    trees: list
    params: ForestParams
    seed: int
    n_classes: int
    n_features: int


def fit_forest(features, labels, params: ForestParams | None = None, seed: int = 0) -> Forest:
    """Train a forest on a feature matrix; deterministic in (data, params, seed)."""
    params = params or ForestParams()
    X = np.ascontiguousarray(features, dtype=np.float64)
    y = np.ascontiguousarray(labels, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y):
        raise DataError("features must be [n, d] with one label per row")
    if not np.all(np.isfinite(X)):
        raise DataError("feature matrix contains non-finite values")
    classes = np.unique(y)
    if classes.min() < 0:
        raise DataError("labels must be non-negative")
    if len(classes) < 2:
        raise DataError("degenerate training set: fewer than 2 classes present")
    n_classes = int(classes.max()) + 1
    n, d = X.shape

    max_depth = -1 if params.max_depth is None else int(params.max_depth)
    max_features = params.resolve_max_features(d)

    trees = []
    for t in range(params.n_trees):
        rng = substream(seed, "tree", t)
        if params.bootstrap:
            idx = rng.integers(0, n, size=n, dtype=np.int64)
        else:
            idx = np.arange(n, dtype=np.int64)
        kernel_seed = int(rng.integers(1, 2**63 - 1))
        arrays = _grow_tree(
            X, y, n_classes, idx, max_depth, int(params.min_samples_split),
            max_features, kernel_seed,
        )
        trees.append(DecisionTree(*[np.asarray(a) for a in arrays]))
    return Forest(trees=trees, params=params, seed=int(seed),
                  n_classes=n_classes, n_features=d)


def predict(forest: Forest, features) -> tuple[np.ndarray, np.ndarray]:
    """Majority-vote labels and per-class vote fractions.

    Ties go to the lowest class id.  Fractions sum to 1 per sample.
    """
    X = np.ascontiguousarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != forest.n_features:
        raise DataError(
            f"feature schema mismatch: expected {forest.n_features} columns, "
            f"got {X.shape[1] if X.ndim == 2 else 'non-2D input'}"
        )
    votes = np.zeros((len(X), forest.n_classes), dtype=np.int64)
    rows = np.arange(len(X))
    for tree in forest.trees:
        votes[rows, tree.predict(X)] += 1
    labels = votes.argmax(axis=1)
    fractions = votes / len(forest.trees)
    return labels, fractions


def save_forest(path, forest: Forest, meta: dict | None = None) -> None:
    header = {
        "format": FOREST_FORMAT,
        "version": FOREST_VERSION,
        "params": forest.params.to_dict(),
        "seed": forest.seed,
        "n_classes": forest.n_classes,
        "n_features": forest.n_features,
        "n_trees": len(forest.trees),
        "meta": dict(meta or {}),
    }
    arrays = {}
    for i, tree in enumerate(forest.trees):
        arrays[f"t{i}_feature"] = tree.feature
        arrays[f"t{i}_threshold"] = tree.threshold
        arrays[f"t{i}_left"] = tree.left
        arrays[f"t{i}_right"] = tree.right
        arrays[f"t{i}_counts"] = tree.counts
    savez_stable(path, arrays, header=header)


def load_forest(path) -> Forest:
    header, arrays = read_header(path, FOREST_FORMAT, FOREST_VERSION)
    with arrays:
        trees = [
            DecisionTree(
                feature=arrays[f"t{i}_feature"],
                threshold=arrays[f"t{i}_threshold"],
                left=arrays[f"t{i}_left"],
                right=arrays[f"t{i}_right"],
                counts=arrays[f"t{i}_counts"],
            )
            for i in range(header["n_trees"])
        ]
    p = header["params"]
    params = ForestParams(
        n_trees=p["n_trees"],
        max_depth=p["max_depth"],
        min_samples_split=p["min_samples_split"],
        max_features=p["max_features"],
        bootstrap=p["bootstrap"],
    )
    return Forest(
        trees=trees,
        params=params,
        seed=header["seed"],
        n_classes=header["n_classes"],
        n_features=header["n_features"],
    )
