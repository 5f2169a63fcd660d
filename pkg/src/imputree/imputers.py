"""The six imputation operators.

Four simple column-statistic imputers (mean, median, most-frequent, max),
chained-equation regression imputation (MICE) and expectation-maximization
under a multivariate normal model (EM). All follow the fit/transform
estimator protocol; fit learns statistics or models from training data,
transform fills missing cells of any matrix with the same columns.
"""

import warnings

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .validation import check_array, check_is_fitted, check_n_features


def _observed_columns_or_raise(X):
    """Every column needs at least one observed value to be imputable."""
    counts = (~np.isnan(X)).sum(axis=0)
    bad = np.flatnonzero(counts == 0)
    if bad.size:
        raise ValueError(f"column {bad[0]} has no observed values")


# --- simple per-column fills ------------------------------------------------


class _ColumnFillImputer(BaseEstimator, TransformerMixin):
    """Shared fit/transform machinery for the per-column-statistic imputers."""

    def _statistic(self, observed):
        raise NotImplementedError

    def fit(self, X, y=None):
        X = check_array(X, allow_nan=True)
        _observed_columns_or_raise(X)
        fills = np.empty(X.shape[1])
        for j in range(X.shape[1]):
            col = X[:, j]
            fills[j] = self._statistic(col[~np.isnan(col)])
        self.fill_values_ = fills
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "fill_values_")
        X = check_array(X, allow_nan=True)
        check_n_features(self, X, self.n_features_in_)
        out = X.copy()
        miss = np.isnan(out)
        out[miss] = np.broadcast_to(self.fill_values_, out.shape)[miss]
        return out


class MeanImputer(_ColumnFillImputer):
    """Fill each missing cell with its column's observed mean."""

    def _statistic(self, observed):
        return observed.mean()


class MedianImputer(_ColumnFillImputer):
    """Fill each missing cell with its column's observed median."""

    def _statistic(self, observed):
        return np.median(observed)


class MFImputer(_ColumnFillImputer):
    """Fill each missing cell with its column's most frequent observed value.

    Frequency ties break toward the smallest value.
    """

    def _statistic(self, observed):
        uniq, counts = np.unique(observed, return_counts=True)
        return uniq[np.argmax(counts)]


class MaxImputer(_ColumnFillImputer):
    """Fill each missing cell with its column's observed maximum."""

    def _statistic(self, observed):
        return observed.max()


# --- MICE -------------------------------------------------------------------


def _ridge_regression(X, y, ridge):
    """Centered ridge fit; intercept unpenalized. Returns (coef, intercept)."""
    xm = X.mean(axis=0)
    ym = y.mean()
    Xc = X - xm
    A = Xc.T @ Xc + ridge * np.eye(X.shape[1])
    try:
        coef = np.linalg.solve(A, Xc.T @ (y - ym))
    except np.linalg.LinAlgError:
        raise ValueError("singular design matrix in chained regression") from None
    return coef, ym - xm @ coef


def _mice_chain(X, miss, fill_values, max_iter, tol, ridge, rng):
    """One stochastic chained-equations pass over a mean-filled matrix.

    Each sweep visits the columns with missing cells in ascending index
    order, fits a ridge regression of the column on all others over the
    rows where it was originally observed, and re-imputes the missing
    cells with prediction plus residual-scaled Gaussian noise. Stops when
    no imputed cell moved by tol or more between sweeps.
    """
    n, d = X.shape
    filled = np.where(miss, fill_values, X)
    miss_cols = np.flatnonzero(miss.any(axis=0))
    if max_iter == 0 or miss_cols.size == 0:
        return filled
    others = {j: np.delete(np.arange(d), j) for j in miss_cols}
    prev = filled[miss]
    for _ in range(max_iter):
        for j in miss_cols:
            obs_rows = ~miss[:, j]
            Xo = filled[np.ix_(obs_rows, others[j])]
            yo = filled[obs_rows, j]
            coef, intercept = _ridge_regression(Xo, yo, ridge)
            resid = yo - (Xo @ coef + intercept)
            dof = max(obs_rows.sum() - d, 1)
            sigma = np.sqrt((resid @ resid) / dof)
            preds = filled[np.ix_(miss[:, j], others[j])] @ coef + intercept
            if sigma > 0:
                preds = preds + rng.normal(0.0, sigma, size=preds.shape)
            filled[miss[:, j], j] = preds
        current = filled[miss]
        if np.max(np.abs(current - prev)) < tol:
            break
        prev = current
    return filled


class MICEImputer(BaseEstimator, TransformerMixin):
    """Multivariate imputation by chained ridge regressions.

    fit runs m independent stochastic chains from distinct sub-seeds;
    fit_transform returns their cell-wise mean (the pooled multiple
    imputation of the training data). transform of other matrices is a
    deterministic single sweep: mean fill, then one prediction pass with
    the per-column regressions refit on the first chain's final matrix.
    """

    def __init__(self, max_iter=10, m=5, tol=1e-3, ridge=1e-3, random_state=0):
        self.max_iter = max_iter
        self.m = m
        self.tol = tol
        self.ridge = ridge
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, allow_nan=True)
        if X.shape[1] < 2:
            raise ValueError("chained-equation imputation needs at least 2 columns")
        if self.max_iter < 0 or self.m < 1 or self.tol <= 0 or self.ridge <= 0:
            raise ValueError("require max_iter >= 0, m >= 1, tol > 0, ridge > 0")
        _observed_columns_or_raise(X)
        miss = np.isnan(X)
        fills = np.nanmean(X, axis=0)
        seeds = np.random.SeedSequence(self.random_state).spawn(self.m)
        mats = [
            _mice_chain(
                X, miss, fills, self.max_iter, self.tol, self.ridge,
                np.random.default_rng(seeds[k]),
            )
            for k in range(self.m)
        ]
        d = X.shape[1]
        first = mats[0]
        models = []
        for j in range(d):
            obs_rows = ~miss[:, j]
            other = np.delete(np.arange(d), j)
            models.append(
                _ridge_regression(first[np.ix_(obs_rows, other)],
                                  first[obs_rows, j], self.ridge)
            )
        self.fill_values_ = fills
        self.models_ = models
        self.pooled_ = np.mean(mats, axis=0)
        self.n_features_in_ = d
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X, y).pooled_.copy()

    def transform(self, X):
        check_is_fitted(self, "models_")
        X = check_array(X, allow_nan=True)
        check_n_features(self, X, self.n_features_in_)
        miss = np.isnan(X)
        filled = np.where(miss, self.fill_values_, X)
        d = X.shape[1]
        for j in np.flatnonzero(miss.any(axis=0)):
            coef, intercept = self.models_[j]
            other = np.delete(np.arange(d), j)
            rows = miss[:, j]
            filled[rows, j] = filled[np.ix_(rows, other)] @ coef + intercept
        return filled


# --- EM ---------------------------------------------------------------------


def _pattern_groups(miss):
    """Row indices grouped by missingness pattern, deterministic order."""
    keys = {}
    for i, row in enumerate(miss):
        keys.setdefault(row.tobytes(), []).append(i)
    return [
        (np.frombuffer(k, dtype=bool), np.array(rows))
        for k, rows in sorted(keys.items())
    ]


def _gauss_loglik(centered, cov):
    """Sum of N(0, cov) log-densities over the rows of centered."""
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ValueError("covariance update is not positive definite") from None
    solved = np.linalg.solve(chol, centered.T)
    logdet = 2.0 * np.log(np.diag(chol)).sum()
    k = cov.shape[0]
    return -0.5 * (
        (solved**2).sum() + centered.shape[0] * (logdet + k * np.log(2 * np.pi))
    )


class EMImputer(BaseEstimator, TransformerMixin):
    """Multivariate-normal imputation fitted by expectation-maximization.

    fit alternates filling missing coordinates with their conditional
    expectations (plus the conditional-covariance correction in the
    second-moment statistics) and re-estimating mean and covariance, until
    parameters move less than tol. transform fills each missing cell with
    its conditional mean given the observed cells of its row; with m > 1
    it instead pools m conditional draws by mean.
    """

    def __init__(self, max_iter=10, m=1, tol=1e-3, ridge=1e-3, random_state=0):
        self.max_iter = max_iter
        self.m = m
        self.tol = tol
        self.ridge = ridge
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, allow_nan=True)
        if self.max_iter < 1 or self.m < 1 or self.tol <= 0 or self.ridge <= 0:
            raise ValueError("require max_iter >= 1, m >= 1, tol > 0, ridge > 0")
        _observed_columns_or_raise(X)
        n, d = X.shape
        if n <= d:
            warnings.warn(
                f"fitting a {d}-dimensional normal model on {n} rows; "
                f"covariance estimates will be weak"
            )
        miss = np.isnan(X)
        mu = np.nanmean(X, axis=0)
        filled = np.where(miss, mu, X)
        centered = filled - mu
        sigma = centered.T @ centered / n + self.ridge * np.eye(d)
        groups = _pattern_groups(miss)
        loglik_path = []
        n_iter = 0
        for _ in range(self.max_iter):
            s1 = np.zeros(d)
            s2 = np.zeros((d, d))
            ll = 0.0
            for pattern, rows in groups:
                obs = ~pattern
                xo = X[np.ix_(rows, obs)]
                if not pattern.any():
                    ll += _gauss_loglik(xo - mu, sigma)
                    s1 += xo.sum(axis=0)
                    s2 += xo.T @ xo
                    continue
                if not obs.any():
                    # no observed coordinates: conditional is the marginal
                    cond_mean = np.tile(mu, (len(rows), 1))
                    cond_cov = sigma
                else:
                    xo_c = xo - mu[obs]
                    soo = sigma[np.ix_(obs, obs)]
                    ll += _gauss_loglik(xo_c, soo)
                    smo = sigma[np.ix_(pattern, obs)]
                    w = np.linalg.solve(soo, smo.T).T
                    cond_mean = mu[pattern] + xo_c @ w.T
                    cond_cov = sigma[np.ix_(pattern, pattern)] - w @ smo.T
                xe = np.empty((len(rows), d))
                xe[:, obs] = xo
                xe[:, pattern] = cond_mean
                s1 += xe.sum(axis=0)
                s2 += xe.T @ xe
                s2[np.ix_(pattern, pattern)] += len(rows) * cond_cov
            loglik_path.append(ll)
            mu_new = s1 / n
            sigma_new = s2 / n - np.outer(mu_new, mu_new) + self.ridge * np.eye(d)
            try:
                np.linalg.cholesky(sigma_new)
            except np.linalg.LinAlgError:
                raise ValueError(
                    "covariance update is not positive definite"
                ) from None
            delta = max(
                np.max(np.abs(mu_new - mu)), np.max(np.abs(sigma_new - sigma))
            )
            mu, sigma = mu_new, sigma_new
            n_iter += 1
            if delta < self.tol:
                break
        self.mean_ = mu
        self.covariance_ = sigma
        self.loglik_path_ = loglik_path
        self.n_iter_ = n_iter
        self.n_features_in_ = d
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        X = check_array(X, allow_nan=True)
        check_n_features(self, X, self.n_features_in_)
        miss = np.isnan(X)
        out = X.copy()
        if not miss.any():
            return out
        mu, sigma = self.mean_, self.covariance_
        rng = np.random.default_rng(
            np.random.SeedSequence([int(self.random_state), 0x7F])
        )
        for pattern, rows in _pattern_groups(miss):
            if not pattern.any():
                continue
            obs = ~pattern
            if not obs.any():
                # conditional is the marginal when nothing is observed
                cond_mean = np.tile(mu, (len(rows), 1))
                cond_cov = sigma
            else:
                soo = sigma[np.ix_(obs, obs)]
                smo = sigma[np.ix_(pattern, obs)]
                w = np.linalg.solve(soo, smo.T).T
                cond_mean = mu[pattern] + (X[np.ix_(rows, obs)] - mu[obs]) @ w.T
                cond_cov = sigma[np.ix_(pattern, pattern)] - w @ smo.T
            if self.m > 1:
                k = int(pattern.sum())
                try:
                    chol = np.linalg.cholesky(cond_cov)
                except np.linalg.LinAlgError:
                    chol = np.linalg.cholesky(cond_cov + 1e-12 * np.eye(k))
                z = rng.standard_normal((len(rows), self.m, k))
                cond_mean = cond_mean + (z @ chol.T).mean(axis=1)
            out[np.ix_(rows, pattern)] = cond_mean
        return out
