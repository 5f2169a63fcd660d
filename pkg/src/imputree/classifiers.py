"""Distance, Bayes and linear classifiers, plus the tree-based family.

Together with trees.py this provides the seven classifier kinds usable at
the root of a pipeline. All expose fit/predict/predict_proba; prediction
ties always resolve toward the lower class id.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .trees import (  # noqa: F401  (re-exported for a single import surface)
    DecisionTreeClassifier,
    GradientBoostingClassifier,
    RandomForestClassifier,
    _encode_labels,
)
from .validation import check_array, check_is_fitted, check_n_features, check_X_y


class KNNClassifier(BaseEstimator, ClassifierMixin):
    """k-nearest-neighbor voting with Minkowski p in {1, 2}.

    Neighbor ranking uses a stable sort, so equal distances resolve toward
    the lower training-row index. With distance weighting, an exact match
    (distance zero) takes the whole vote.
    """

    def __init__(self, n_neighbors=5, p=2, weights="uniform"):
        self.n_neighbors = n_neighbors
        self.p = p
        self.weights = weights

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if self.p not in (1, 2):
            raise ValueError(f"p must be 1 or 2, got {self.p}")
        if self.weights not in ("uniform", "distance"):
            raise ValueError(f"unknown weights {self.weights!r}")
        if not 1 <= self.n_neighbors <= X.shape[0]:
            raise ValueError(
                f"n_neighbors={self.n_neighbors} outside [1, {X.shape[0]}] "
                f"for this training set"
            )
        self.classes_, self._codes = _encode_labels(y)
        self._train = X
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "_train")
        X = check_array(X)
        check_n_features(self, X, self.n_features_in_)
        diff = X[:, None, :] - self._train[None, :, :]
        if self.p == 1:
            dists = np.abs(diff).sum(axis=2)
        else:
            dists = np.sqrt((diff**2).sum(axis=2))
        order = np.argsort(dists, axis=1, kind="stable")[:, : self.n_neighbors]
        votes = self._codes[order]
        nd = np.take_along_axis(dists, order, axis=1)
        if self.weights == "uniform":
            w = np.ones_like(nd)
        else:
            exact = nd == 0.0
            w = np.empty_like(nd)
            has_exact = exact.any(axis=1)
            with np.errstate(divide="ignore"):
                w[~has_exact] = 1.0 / nd[~has_exact]
            w[has_exact] = exact[has_exact].astype(float)
        proba = np.zeros((X.shape[0], len(self.classes_)))
        for c in range(len(self.classes_)):
            proba[:, c] = (w * (votes == c)).sum(axis=1)
        return proba / proba.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


class GaussianNB(BaseEstimator, ClassifierMixin):
    """Naive Bayes with per-class per-column normal likelihoods.

    Variances are floored at 1e-9 so degenerate columns cannot produce
    infinite densities.
    """

    VAR_FLOOR = 1e-9

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_, codes = _encode_labels(y)
        k = len(self.classes_)
        self.theta_ = np.empty((k, X.shape[1]))
        self.var_ = np.empty((k, X.shape[1]))
        self.log_prior_ = np.empty(k)
        for c in range(k):
            block = X[codes == c]
            self.theta_[c] = block.mean(axis=0)
            self.var_[c] = np.maximum(block.var(axis=0), self.VAR_FLOOR)
            self.log_prior_[c] = np.log(len(block) / len(X))
        self.n_features_in_ = X.shape[1]
        return self

    def _joint_log_likelihood(self, X):
        jll = np.empty((X.shape[0], len(self.classes_)))
        for c in range(len(self.classes_)):
            quad = ((X - self.theta_[c]) ** 2 / self.var_[c]).sum(axis=1)
            norm = np.log(2.0 * np.pi * self.var_[c]).sum()
            jll[:, c] = self.log_prior_[c] - 0.5 * (norm + quad)
        return jll

    def predict_proba(self, X):
        check_is_fitted(self, "theta_")
        X = check_array(X)
        check_n_features(self, X, self.n_features_in_)
        jll = self._joint_log_likelihood(X)
        jll -= jll.max(axis=1, keepdims=True)
        p = np.exp(jll)
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


class MultinomialNB(BaseEstimator, ClassifierMixin):
    """Naive Bayes over per-class feature totals with additive smoothing.

    Feature values act as event counts, so negative training values are a
    usage error; no internal shifting is applied. Pairing this classifier
    with a rescaler that makes its input non-negative is the caller's job.
    Scoring accepts any values, since the log-likelihood is a plain dot
    product with the fitted log-probabilities.
    """

    def __init__(self, alpha=1.0, fit_prior=True):
        self.alpha = alpha
        self.fit_prior = fit_prior

    @staticmethod
    def _check_non_negative(X):
        if (X < 0).any():
            raise ValueError("MultinomialNB requires non-negative features")

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        self._check_non_negative(X)
        self.classes_, codes = _encode_labels(y)
        k = len(self.classes_)
        d = X.shape[1]
        counts = np.empty((k, d))
        class_sizes = np.empty(k)
        for c in range(k):
            counts[c] = X[codes == c].sum(axis=0)
            class_sizes[c] = (codes == c).sum()
        smoothed = counts + self.alpha
        self.feature_log_prob_ = np.log(smoothed) - np.log(
            smoothed.sum(axis=1, keepdims=True)
        )
        if self.fit_prior:
            self.class_log_prior_ = np.log(class_sizes / len(X))
        else:
            self.class_log_prior_ = np.full(k, -np.log(k))
        self.n_features_in_ = d
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "feature_log_prob_")
        X = check_array(X)
        check_n_features(self, X, self.n_features_in_)
        jll = X @ self.feature_log_prob_.T + self.class_log_prior_
        jll -= jll.max(axis=1, keepdims=True)
        p = np.exp(jll)
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


def _sigmoid(z):
    return np.where(
        z >= 0, 1.0 / (1.0 + np.exp(-np.clip(z, None, 500))),
        np.exp(np.clip(z, -500, None)) / (1.0 + np.exp(np.clip(z, -500, None))),
    )


def _spectral_norm_sq(A, iters=30):
    """Largest squared singular value via power iteration on AᵀA."""
    v = np.ones(A.shape[1]) / np.sqrt(A.shape[1])
    lam = 1.0
    for _ in range(iters):
        w = A.T @ (A @ v)
        lam = np.linalg.norm(w)
        if lam == 0.0:
            return 1.0
        v = w / lam
    return lam


class LogisticRegression(BaseEstimator, ClassifierMixin):
    """L2-regularized logistic fit by full-batch gradient descent.

    The step size is the inverse of the loss gradient's Lipschitz bound,
    so descent is monotone without line search. More than two classes are
    handled one-vs-rest; the intercept is never penalized.
    """

    def __init__(self, C=1.0, max_iter=300, tol=1e-8):
        self.C = C
        self.max_iter = max_iter
        self.tol = tol

    def _fit_binary(self, Xb, t, lam, step):
        w = np.zeros(Xb.shape[1])
        mask = np.ones(Xb.shape[1])
        mask[-1] = 0.0  # bias column carries no penalty
        for _ in range(self.max_iter):
            p = _sigmoid(Xb @ w)
            grad = Xb.T @ (p - t) / Xb.shape[0] + lam * mask * w
            w -= step * grad
            if np.max(np.abs(grad)) < self.tol:
                break
        return w

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if self.C <= 0:
            raise ValueError(f"C must be positive, got {self.C}")
        self.classes_, codes = _encode_labels(y)
        n = X.shape[0]
        Xb = np.column_stack([X, np.ones(n)])
        lam = 1.0 / (self.C * n)
        lipschitz = _spectral_norm_sq(Xb) / (4.0 * n) + lam
        step = 1.0 / lipschitz
        k = len(self.classes_)
        if k == 2:
            self.coef_ = self._fit_binary(Xb, (codes == 1).astype(float), lam, step)[
                None, :
            ]
        else:
            self.coef_ = np.vstack(
                [
                    self._fit_binary(Xb, (codes == c).astype(float), lam, step)
                    for c in range(k)
                ]
            )
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        check_n_features(self, X, self.n_features_in_)
        Xb = np.column_stack([X, np.ones(X.shape[0])])
        scores = _sigmoid(Xb @ self.coef_.T)
        if len(self.classes_) == 2:
            return np.column_stack([1.0 - scores[:, 0], scores[:, 0]])
        return scores / scores.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]
