"""Preprocessors and feature selectors for complete matrices.

Three column scalers, a principal-component projection and two feature
selectors. All fit on complete training data and apply a deterministic
transform; class labels are never part of the transformed matrix and pass
through the surrounding pipeline untouched.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .validation import check_array, check_is_fitted, check_n_features, check_X_y


class MaxAbsScaler(BaseEstimator, TransformerMixin):
    """Scale each column by its maximum absolute value.

    An all-zero column keeps scale 1. Training-data output lies in [-1, 1].
    The copy flag is accepted for interface compatibility; transform always
    returns a new array.
    """

    def __init__(self, copy=True):
        self.copy = copy

    def fit(self, X, y=None):
        X = check_array(X)
        scale = np.abs(X).max(axis=0)
        scale[scale == 0.0] = 1.0
        self.scale_ = scale
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_")
        X = check_array(X)
        check_n_features(self, X, self.n_features_in_)
        return X / self.scale_


class MinMaxScaler(BaseEstimator, TransformerMixin):
    """Affinely map each column's training range onto [0, 1].

    A constant column (min equal to max) passes through unchanged.
    """

    def fit(self, X, y=None):
        X = check_array(X)
        self.min_ = X.min(axis=0)
        span = X.max(axis=0) - self.min_
        degenerate = span == 0.0
        self.scale_ = np.where(degenerate, 1.0, span)
        self.offset_ = np.where(degenerate, 0.0, self.min_)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_")
        X = check_array(X)
        check_n_features(self, X, self.n_features_in_)
        return (X - self.offset_) / self.scale_


class StandardScaler(BaseEstimator, TransformerMixin):
    """Center each column and scale to unit population standard deviation.

    A zero-variance column is centered only (divisor 1).
    """

    def fit(self, X, y=None):
        X = check_array(X)
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        std[std == 0.0] = 1.0
        self.std_ = std
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_array(X)
        check_n_features(self, X, self.n_features_in_)
        return (X - self.mean_) / self.std_


class PCA(BaseEstimator, TransformerMixin):
    """Project onto the leading eigenvectors of the feature covariance.

    n_components is clamped to min(n_rows, n_cols) at fit time. Component
    signs follow the convention that each component's largest-magnitude
    entry is positive, so the projection is deterministic.
    """

    def __init__(self, n_components=2):
        self.n_components = n_components

    def fit(self, X, y=None):
        X = check_array(X)
        if self.n_components <= 0:
            raise ValueError(f"n_components must be positive, got {self.n_components}")
        n, d = X.shape
        k = min(self.n_components, n, d)
        self.mean_ = X.mean(axis=0)
        xc = X - self.mean_
        cov = xc.T @ xc / n
        eigvals, eigvecs = np.linalg.eigh(cov)
        order = np.argsort(eigvals)[::-1][:k]
        components = eigvecs[:, order].T
        for i in range(k):
            peak = np.argmax(np.abs(components[i]))
            if components[i, peak] < 0:
                components[i] = -components[i]
        self.components_ = components
        self.explained_variance_ = eigvals[order]
        self.n_components_ = k
        self.n_features_in_ = d
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_array(X)
        check_n_features(self, X, self.n_features_in_)
        return (X - self.mean_) @ self.components_.T


class VarianceThreshold(BaseEstimator, TransformerMixin):
    """Drop columns whose training variance does not exceed the threshold."""

    def __init__(self, threshold=0.0):
        self.threshold = threshold

    def fit(self, X, y=None):
        X = check_array(X)
        variances = X.var(axis=0)
        support = np.flatnonzero(variances > self.threshold)
        if support.size == 0:
            raise ValueError(
                f"no column has variance above {self.threshold}; "
                f"nothing would remain"
            )
        self.support_ = support
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "support_")
        X = check_array(X)
        check_n_features(self, X, self.n_features_in_)
        return X[:, self.support_]


def f_classif(X, y):
    """One-way ANOVA F statistic of each column against the class labels.

    A column with zero within-class and zero between-class variance scores
    0; zero within-class variance with class separation scores infinity.
    """
    X, y = check_X_y(X, y)
    classes = np.unique(y)
    n = X.shape[0]
    grand = X.mean(axis=0)
    ss_between = np.zeros(X.shape[1])
    ss_within = np.zeros(X.shape[1])
    for c in classes:
        block = X[y == c]
        mean_c = block.mean(axis=0)
        ss_between += len(block) * (mean_c - grand) ** 2
        ss_within += ((block - mean_c) ** 2).sum(axis=0)
    df_between = max(len(classes) - 1, 1)
    df_within = max(n - len(classes), 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = (ss_between / df_between) / (ss_within / df_within)
    f[np.isnan(f)] = 0.0
    return f


class SelectKBest(BaseEstimator, TransformerMixin):
    """Keep the k columns with the highest ANOVA F score against the labels.

    Score ties break toward the lower column index; k is clamped to the
    column count. Retained columns keep their original order.
    """

    def __init__(self, k=10):
        self.k = k

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if self.k <= 0:
            raise ValueError(f"k must be positive, got {self.k}")
        k = min(self.k, X.shape[1])
        scores = f_classif(X, y)
        # stable sort on negated scores keeps lower indices first on ties
        ranked = np.argsort(-scores, kind="stable")[:k]
        self.scores_ = scores
        self.support_ = np.sort(ranked)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "support_")
        X = check_array(X)
        check_n_features(self, X, self.n_features_in_)
        return X[:, self.support_]
