"""CART-style regression trees plus the bagged-ensemble learner.

One splitter serves both loss functions: for 0/1 responses the
within-node sum of squares equals n*p*(1-p), so minimizing SSE is the
same ranking as the weighted Gini impurity. Ties are broken by lowest
feature index, then lowest threshold, so trees are a total function of
(data, candidate features). Growth is a numba kernel; the refit-heavy
perturbation loops build tens of thousands of trees.
"""

from __future__ import annotations

import numba as nb
import numpy as np

from ..core import EPS, Dataset, Family, Learner, Predictor


@nb.njit(cache=True)
def _grow(X, y, min_node, max_depth, mtry, rng_seed):
    """Grow one tree; returns flat node arrays and the training-row
    leaf assignment."""
    n, d = X.shape
    np.random.seed(rng_seed)
    max_nodes = 2 * n + 1
    feature = np.full(max_nodes, -1, dtype=np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, dtype=np.int64)
    right = np.full(max_nodes, -1, dtype=np.int64)
    value = np.zeros(max_nodes)
    leaf_of = np.zeros(n, dtype=np.int64)

    rows = np.arange(n)
    # stack entries: (node, start, end, depth) over the rows buffer
    stack = np.empty((max_nodes, 4), dtype=np.int64)
    stack[0] = (0, 0, n, 0)
    top = 1
    n_nodes = 1
    feats = np.empty(d, dtype=np.int64)
    while top > 0:
        top -= 1
        node, start, end, depth = stack[top]
        m = end - start
        s = 0.0
        for i in range(start, end):
            s += y[rows[i]]
        mean = s / m
        value[node] = mean
        if m <= min_node or (max_depth >= 0 and depth >= max_depth):
            for i in range(start, end):
                leaf_of[rows[i]] = node
            continue
        sse_parent = 0.0
        for i in range(start, end):
            diff = y[rows[i]] - mean
            sse_parent += diff * diff
        if sse_parent <= 1e-12:
            for i in range(start, end):
                leaf_of[rows[i]] = node
            continue
        # candidate features: all, or mtry sampled without replacement
        if mtry >= d:
            n_feats = d
            for j in range(d):
                feats[j] = j
        else:
            n_feats = mtry
            chosen = np.full(d, False)
            cnt = 0
            while cnt < mtry:
                f = np.random.randint(0, d)
                if not chosen[f]:
                    chosen[f] = True
                    cnt += 1
            j = 0
            for f in range(d):
                if chosen[f]:
                    feats[j] = f
                    j += 1
        best_sse = np.inf
        best_feat = -1
        best_thr = 0.0
        xv = np.empty(m)
        yv = np.empty(m)
        for j in range(n_feats):
            f = feats[j]
            for i in range(m):
                xv[i] = X[rows[start + i], f]
                yv[i] = y[rows[start + i]]
            order = np.argsort(xv, kind="mergesort")
            total = 0.0
            total2 = 0.0
            for i in range(m):
                total += yv[i]
                total2 += yv[i] * yv[i]
            cl = 0.0
            cl2 = 0.0
            for i in range(m - 1):
                v = yv[order[i]]
                cl += v
                cl2 += v * v
                x_here = xv[order[i]]
                x_next = xv[order[i + 1]]
                if x_here >= x_next:
                    continue
                nl = i + 1
                nr = m - nl
                sse = (cl2 - cl * cl / nl) + \
                      ((total2 - cl2) - (total - cl) * (total - cl) / nr)
                if sse < best_sse - 1e-12:
                    best_sse = sse
                    best_feat = f
                    best_thr = 0.5 * (x_here + x_next)
        if best_feat < 0 or best_sse >= sse_parent - 1e-12:
            for i in range(start, end):
                leaf_of[rows[i]] = node
            continue
        # partition rows in place: left block first
        lo, hi = start, end - 1
        while lo <= hi:
            if X[rows[lo], best_feat] <= best_thr:
                lo += 1
            else:
                tmp = rows[lo]
                rows[lo] = rows[hi]
                rows[hi] = tmp
                hi -= 1
        feature[node] = best_feat
        threshold[node] = best_thr
        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        left[node] = lid
        right[node] = rid
        stack[top] = (lid, start, lo, depth + 1)
        stack[top + 1] = (rid, lo, end, depth + 1)
        top += 2
    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes],
            right[:n_nodes], value[:n_nodes], leaf_of)


@nb.njit(cache=True)
def _apply(X, feature, threshold, left, right):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


class Tree:
    """Flat-array binary tree: leaves carry the node mean of y."""

    __slots__ = ("feature", "threshold", "left", "right", "value", "leaf_of")

    def __init__(self, feature, threshold, left, right, value, leaf_of):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value
        self.leaf_of = leaf_of  # training-row -> leaf id

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=float)
        return _apply(X, self.feature, self.threshold, self.left, self.right)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


def build_tree(X: np.ndarray, y: np.ndarray,
               rng: np.random.Generator | None = None,
               mtry: int | None = None, min_node: int = 5,
               max_depth: int | None = None) -> Tree:
    """Grow a tree on (X, y); nodes of size <= min_node become leaves.

    ``mtry`` random candidate features per split when given (bagging);
    all features otherwise (boosting).
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    d = X.shape[1]
    seed = int(rng.integers(2**31 - 1)) if rng is not None else 0
    out = _grow(X, y, min_node, -1 if max_depth is None else max_depth,
                d if mtry is None else int(mtry), seed)
    return Tree(*out)


class BaggedTreesPredictor(Predictor):
    """Average of bootstrap trees.

    On the exact training design the expectation is the out-of-bag
    average (rows with no out-of-bag tree fall back to the full
    average), mirroring how bagged ensembles self-report fitted values;
    genuinely new rows get the all-tree average.
    """

    def __init__(self, trees, inbag, train_X, family):
        self.trees = trees
        self.inbag = inbag  # (n_trees, n) bootstrap multiplicities
        self.train_X = train_X
        self.family = family
        self.self_dof = None

    def expectation(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        preds = np.stack([t.predict(X) for t in self.trees])
        if X.shape == self.train_X.shape and np.array_equal(X, self.train_X):
            oob = self.inbag == 0
            counts = oob.sum(axis=0)
            with np.errstate(invalid="ignore"):
                out = (preds * oob).sum(axis=0) / counts
            out = np.where(counts > 0, out, preds.mean(axis=0))
        else:
            out = preds.mean(axis=0)
        if self.family is Family.BERNOULLI:
            out = np.clip(out, EPS, 1.0 - EPS)
        return out


class BaggedTreesLearner(Learner):
    """Learner #3: bootstrap-aggregated trees (random-forest style)."""

    stochastic = True

    def __init__(self, n_trees: int = 500, mtry: int | None = None,
                 max_depth: int | None = None):
        if n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        self.n_trees = n_trees
        self.mtry = mtry
        self.max_depth = max_depth
        self.name = "bagged"

    def fit(self, data: Dataset, seed: int = 0) -> BaggedTreesPredictor:
        n, d = data.X.shape
        mtry = self.mtry if self.mtry is not None else max(1, int(np.ceil(d / 3)))
        min_node = 5 if data.family is Family.GAUSSIAN else 1
        trees = []
        inbag = np.zeros((self.n_trees, n), dtype=int)
        for t in range(self.n_trees):
            rng = np.random.default_rng(np.random.SeedSequence((seed, t)))
            rows = rng.integers(0, n, size=n)
            np.add.at(inbag[t], rows, 1)
            trees.append(build_tree(data.X[rows], data.y[rows], rng,
                                    mtry=mtry, min_node=min_node,
                                    max_depth=self.max_depth))
        return BaggedTreesPredictor(trees, inbag, data.X.copy(), data.family)
