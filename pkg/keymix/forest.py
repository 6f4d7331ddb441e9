'''Random forest of CART trees with Gini impurity.

Trees are grown on bootstrap resamples, trying ceil(sqrt(d)) randomly
chosen features at every split, and vote on the class of a sample. Each
tree draws from its own generator seeded with (seed, tree index), so a
forest is the same whatever the number of jobs it is trained with.
'''
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from joblib import Parallel, delayed

DEFAULT_N_TREES = 200

# generator stream used for vote tie-breaks, disjoint from tree indices
_TIE_BREAK_STREAM = 2**32 - 1
_LEAF = -1


class ClassificationError(ValueError):
    pass


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = DEFAULT_N_TREES
    max_depth: Optional[int] = None
    # 'sqrt' for ceil(sqrt(d)), or an explicit count
    max_features: Union[str, int] = 'sqrt'
    bootstrap: bool = True
    min_samples_split: int = 2
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_trees < 1:
            raise ClassificationError(f'n_trees must be >= 1, got {self.n_trees}')
        if self.max_depth is not None and self.max_depth < 1:
            raise ClassificationError(f'max_depth must be >= 1, got {self.max_depth}')
        if self.min_samples_split < 2:
            raise ClassificationError(f'min_samples_split must be >= 2, got {self.min_samples_split}')
        if self.seed < 0:
            raise ClassificationError(f'seed must be >= 0, got {self.seed}')
        if self.max_features != 'sqrt' and (not isinstance(self.max_features, int) or self.max_features < 1):
            raise ClassificationError(f"max_features must be 'sqrt' or a positive int, got {self.max_features!r}")

    def features_per_split(self, n_features):
        if self.max_features == 'sqrt':
            return max(1, math.ceil(math.sqrt(n_features)))
        return min(self.max_features, n_features)


@dataclass(frozen=True)
class DecisionTree:
    '''Flat array form of a grown tree; node 0 is the root.'''
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    # majority class of the training samples reaching each node
    label: np.ndarray

    @property
    def node_count(self):
        return len(self.feature)

    def apply(self, X):
        '''Index of the leaf every row of X ends in.'''
        nodes = np.zeros(len(X), dtype=np.intp)
        rows = np.arange(len(X))
        active = self.left[nodes] != _LEAF
        while active.any():
            current = nodes[active]
            go_left = X[rows[active], self.feature[current]] <= self.threshold[current]
            nodes[active] = np.where(go_left, self.left[current], self.right[current])
            active = self.left[nodes] != _LEAF
        return nodes

    def predict(self, X):
        return self.label[self.apply(X)]


def _best_split(X, y, n_classes, indices, features):
    '''Lowest weighted Gini split of the node over the given features.

    Returns (feature, threshold) or None when every feature is constant
    on the node.
    '''
    values = X[np.ix_(indices, features)]
    order = np.argsort(values, axis=0, kind='stable')
    sorted_values = np.take_along_axis(values, order, axis=0)
    valid = sorted_values[:-1] < sorted_values[1:]
    if not valid.any():
        return None

    size = len(indices)
    onehot = np.eye(n_classes)[y[indices][order]]
    left = np.cumsum(onehot, axis=0)[:-1]
    right = left[-1] + onehot[-1] - left
    n_left = np.arange(1, size, dtype=float)[:, None]
    n_right = size - n_left
    # size times the weighted Gini impurity of the two children
    impurity = (n_left - (left**2).sum(axis=2) / n_left) + (n_right - (right**2).sum(axis=2) / n_right)
    impurity[~valid] = np.inf

    position, column = np.unravel_index(int(np.argmin(impurity)), impurity.shape)
    low = sorted_values[position, column]
    high = sorted_values[position + 1, column]
    threshold = low + (high - low) / 2.0
    if not threshold < high:
        threshold = low
    return int(features[column]), float(threshold)


def grow_tree(X, y, n_classes, params, tree_index):
    '''Grow one tree of the forest on its own bootstrap resample.'''
    rng = np.random.default_rng([params.seed, tree_index])
    n_samples, n_features = X.shape
    if params.bootstrap:
        sample = rng.integers(0, n_samples, size=n_samples)
    else:
        sample = np.arange(n_samples)
    per_split = params.features_per_split(n_features)

    feature, threshold, left, right, label = [], [], [], [], []

    def new_node(indices):
        counts = np.bincount(y[indices], minlength=n_classes)
        feature.append(_LEAF)
        threshold.append(0.0)
        left.append(_LEAF)
        right.append(_LEAF)
        label.append(int(np.argmax(counts)))
        return len(feature) - 1, counts

    root, root_counts = new_node(sample)
    stack = [(root, sample, root_counts, 0)]
    while stack:
        node, indices, counts, depth = stack.pop()
        if counts.max() == len(indices) or len(indices) < params.min_samples_split:
            continue
        if params.max_depth is not None and depth >= params.max_depth:
            continue
        candidates = rng.permutation(n_features)
        split = _best_split(X, y, n_classes, indices, candidates[:per_split])
        if split is None and per_split < n_features:
            # every drawn feature was constant here, look at the others
            split = _best_split(X, y, n_classes, indices, candidates[per_split:])
        if split is None:
            continue
        feature_index, cut = split
        goes_left = X[indices, feature_index] <= cut
        left_node, left_counts = new_node(indices[goes_left])
        right_node, right_counts = new_node(indices[~goes_left])
        feature[node] = feature_index
        threshold[node] = cut
        left[node] = left_node
        right[node] = right_node
        stack.append((right_node, indices[~goes_left], right_counts, depth + 1))
        stack.append((left_node, indices[goes_left], left_counts, depth + 1))

    return DecisionTree(np.array(feature, dtype=np.intp), np.array(threshold, dtype=float),
                        np.array(left, dtype=np.intp), np.array(right, dtype=np.intp),
                        np.array(label, dtype=np.intp))


class RandomForest:
    '''Majority vote of CART trees.

    predict_proba returns the fraction of trees voting for each class, in
    the order of classes_. predict breaks ties between classes with equal
    votes by a seeded permutation of the classes.
    '''

    def __init__(self, params=None):
        self.params = params or ForestParams()
        self.classes_ = None
        self.trees_ = []

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        if X.ndim != 2 or len(X) != len(y):
            raise ClassificationError(f'feature matrix {X.shape} does not match {len(y)} labels')
        if len(X) == 0:
            raise ClassificationError('no training samples')
        if not np.all(np.isfinite(X)):
            raise ClassificationError('feature matrix has non-finite values')
        self.classes_, encoded = np.unique(y, return_inverse=True)
        encoded = encoded.reshape(-1)
        n_classes = len(self.classes_)
        self.trees_ = Parallel(n_jobs=self.params.n_jobs)(
            delayed(grow_tree)(X, encoded, n_classes, self.params, index)
            for index in range(self.params.n_trees))
        return self

    def _check_fitted(self, X):
        if self.classes_ is None:
            raise ClassificationError('forest is not fitted')
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ClassificationError(f'expected a 2-d feature matrix, got shape {X.shape}')
        return X

    def predict_proba(self, X):
        X = self._check_fitted(X)
        votes = np.zeros((len(X), len(self.classes_)), dtype=float)
        rows = np.arange(len(X))
        for tree in self.trees_:
            votes[rows, tree.predict(X)] += 1.0
        return votes / len(self.trees_)

    def predict(self, X):
        proba = self.predict_proba(X)
        order = np.random.default_rng([self.params.seed, _TIE_BREAK_STREAM]).permutation(len(self.classes_))
        winners = order[np.argmax(proba[:, order], axis=1)]
        return self.classes_[winners]
