"""Tree-based classifiers: single CART, bagged forest, boosted ensemble."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ._tree_kernels import apply_tree, grow_classification_tree, grow_regression_tree
from .validation import check_array, check_is_fitted, check_n_features, check_X_y

_CRITERIA = {"gini": 0, "entropy": 1}
_NO_DEPTH_LIMIT = 2**31


def _encode_labels(y):
    classes, codes = np.unique(y, return_inverse=True)
    if len(classes) < 2:
        raise ValueError("training data contains a single class")
    return classes, codes.astype(np.int64)


class DecisionTreeClassifier(BaseEstimator, ClassifierMixin):
    """Greedy CART classifier.

    Split search scans features in ascending index order and keeps the
    first best split, so fitting is fully deterministic.
    """

    def __init__(self, criterion="gini", max_depth=5, min_samples_split=2):
        self.criterion = criterion
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if self.criterion not in _CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}")
        depth = self.max_depth if self.max_depth is not None else _NO_DEPTH_LIMIT
        if depth < 1 or self.min_samples_split < 2:
            raise ValueError("require max_depth >= 1 and min_samples_split >= 2")
        self.classes_, codes = _encode_labels(y)
        self.tree_ = grow_classification_tree(
            X, codes, len(self.classes_), depth, self.min_samples_split,
            _CRITERIA[self.criterion], X.shape[1], 0,
        )
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "tree_")
        X = check_array(X)
        check_n_features(self, X, self.n_features_in_)
        feature, threshold, left, right, counts = self.tree_
        leaf = apply_tree(X, feature, threshold, left, right)
        dist = counts[leaf]
        return dist / dist.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


class RandomForestClassifier(BaseEstimator, ClassifierMixin):
    """Bagged CART ensemble with per-split feature subsampling.

    Each member tree draws a bootstrap sample and an independent split-time
    feature-shuffle seed from one spawned seed sequence, so the forest is
    deterministic given random_state. With n_estimators=1, bootstrap=False
    and max_features=None it degenerates to DecisionTreeClassifier.
    """

    def __init__(self, n_estimators=100, criterion="gini", max_depth=None,
                 min_samples_split=2, max_features="sqrt", bootstrap=True,
                 random_state=0):
        self.n_estimators = n_estimators
        self.criterion = criterion
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be positive")
        if self.criterion not in _CRITERIA:
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if self.max_features not in ("sqrt", None):
            raise ValueError("max_features must be 'sqrt' or None")
        self.classes_, codes = _encode_labels(y)
        n, d = X.shape
        depth = self.max_depth if self.max_depth is not None else _NO_DEPTH_LIMIT
        n_try = d if self.max_features is None else max(1, int(np.sqrt(d)))
        seeds = np.random.SeedSequence(self.random_state).spawn(self.n_estimators)
        trees = []
        for child in seeds:
            rng = np.random.default_rng(child)
            rows = rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            lcg_seed = int(rng.integers(1 << 62))
            trees.append(
                grow_classification_tree(
                    X[rows], codes[rows], len(self.classes_), depth,
                    self.min_samples_split, _CRITERIA[self.criterion],
                    n_try, lcg_seed,
                )
            )
        self.trees_ = trees
        self.n_features_in_ = d
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "trees_")
        X = check_array(X)
        check_n_features(self, X, self.n_features_in_)
        acc = np.zeros((X.shape[0], len(self.classes_)))
        for feature, threshold, left, right, counts in self.trees_:
            leaf = apply_tree(X, feature, threshold, left, right)
            dist = counts[leaf]
            acc += dist / dist.sum(axis=1, keepdims=True)
        return acc / len(self.trees_)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


def _binary_log_loss(margins, targets):
    # mean of log(1 + exp(-margin)) written against the 0/1 target
    return float(np.mean(np.logaddexp(0.0, margins) - targets * margins))


class GradientBoostingClassifier(BaseEstimator, ClassifierMixin):
    """Stage-wise regression trees on the logistic loss.

    Each stage fits a least-squares tree to the negative gradient and
    steps by learning_rate times the Newton leaf value. More than two
    classes train one boosted chain per class (one-vs-rest) with stages
    advanced in lockstep. loss_path_ records the training loss after every
    stage, starting from the constant-model loss.
    """

    def __init__(self, n_estimators=100, learning_rate=0.1, max_depth=3):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if self.n_estimators < 1 or self.learning_rate <= 0 or self.max_depth < 1:
            raise ValueError(
                "require n_estimators >= 1, learning_rate > 0, max_depth >= 1"
            )
        self.classes_, codes = _encode_labels(y)
        k = len(self.classes_)
        n = X.shape[0]
        chains = 1 if k == 2 else k
        targets = np.empty((chains, n))
        if chains == 1:
            targets[0] = codes == 1
        else:
            for c in range(chains):
                targets[c] = codes == c
        base = np.empty(chains)
        margins = np.empty((chains, n))
        for c in range(chains):
            p = min(max(targets[c].mean(), 1e-12), 1.0 - 1e-12)
            base[c] = np.log(p / (1.0 - p))
            margins[c] = base[c]
        stages = [[] for _ in range(chains)]
        loss_path = [
            sum(_binary_log_loss(margins[c], targets[c]) for c in range(chains))
        ]
        for _ in range(self.n_estimators):
            for c in range(chains):
                p = 1.0 / (1.0 + np.exp(-margins[c]))
                grad = targets[c] - p
                hess = p * (1.0 - p)
                tree = grow_regression_tree(
                    X, grad, hess, self.max_depth, 2, 1e-16
                )
                feature, threshold, left, right, value = tree
                leaf = apply_tree(X, feature, threshold, left, right)
                margins[c] += self.learning_rate * value[leaf]
                stages[c].append(tree)
            loss_path.append(
                sum(_binary_log_loss(margins[c], targets[c]) for c in range(chains))
            )
        self.base_margin_ = base
        self.stages_ = stages
        self.loss_path_ = np.array(loss_path)
        self.n_features_in_ = X.shape[1]
        return self

    def _margins(self, X):
        chains = len(self.stages_)
        margins = np.empty((chains, X.shape[0]))
        for c in range(chains):
            m = np.full(X.shape[0], self.base_margin_[c])
            for feature, threshold, left, right, value in self.stages_[c]:
                leaf = apply_tree(X, feature, threshold, left, right)
                m += self.learning_rate * value[leaf]
            margins[c] = m
        return margins

    def predict_proba(self, X):
        check_is_fitted(self, "stages_")
        X = check_array(X)
        check_n_features(self, X, self.n_features_in_)
        margins = self._margins(X)
        sig = 1.0 / (1.0 + np.exp(-np.clip(margins, -500, 500)))
        if len(self.stages_) == 1:
            return np.column_stack([1.0 - sig[0], sig[0]])
        probs = sig.T
        return probs / probs.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]
