"""Imputer behaviour: simple fills, MICE chains, EM parameter recovery."""

import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from imputree.imputers import (
    EMImputer,
    MaxImputer,
    MeanImputer,
    MedianImputer,
    MFImputer,
    MICEImputer,
    _mice_chain,
)

ALL_SIMPLE = [MeanImputer, MedianImputer, MFImputer, MaxImputer]
ALL_KINDS = ALL_SIMPLE + [MICEImputer, EMImputer]


def linear_pair(n, seed, frac_missing=0.2, slope=2.0):
    """Two columns with an exact linear relation; part of column 1 blanked."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(50.0, 150.0, size=n)
    X = np.column_stack([x, slope * x])
    holes = rng.choice(n, size=int(frac_missing * n), replace=False)
    X_miss = X.copy()
    X_miss[holes, 1] = np.nan
    return X, X_miss, holes


def mvn_sample(n, rho, seed):
    rng = np.random.default_rng(seed)
    cov = np.array([[1.0, rho], [rho, 1.0]])
    return rng.multivariate_normal([0.0, 0.0], cov, size=n)


def blank_cells(X, frac, seed):
    """MCAR-style blanking that keeps at least one observed cell per row."""
    rng = np.random.default_rng(seed)
    n, d = X.shape
    out = X.copy()
    k = int(round(frac * n * d))
    row_hits = np.zeros(n, dtype=int)
    taken = 0
    for flat in rng.permutation(n * d):
        r, c = divmod(int(flat), d)
        if row_hits[r] < d - 1:
            out[r, c] = np.nan
            row_hits[r] += 1
            taken += 1
            if taken == k:
                break
    return out


class TestSimpleImputers:
    def test_mean_fill(self):
        X = np.array([[1.0], [np.nan], [3.0]])
        out = MeanImputer().fit(X).transform(X)
        assert np.allclose(out[:, 0], [1.0, 2.0, 3.0])

    def test_median_fill(self):
        X = np.array([[1.0], [2.0], [np.nan], [9.0]])
        out = MedianImputer().fit_transform(X)
        assert out[2, 0] == 2.0

    def test_most_frequent_fill(self):
        X = np.array([[1.0], [1.0], [2.0], [np.nan]])
        out = MFImputer().fit_transform(X)
        assert out[3, 0] == 1.0

    def test_most_frequent_tie_takes_smaller(self):
        X = np.array([[4.0], [4.0], [2.0], [2.0], [np.nan]])
        assert MFImputer().fit_transform(X)[4, 0] == 2.0

    def test_max_fill(self):
        X = np.array([[3.0], [np.nan], [5.0]])
        out = MaxImputer().fit_transform(X)
        assert out[1, 0] == 5.0

    @pytest.mark.parametrize("cls", ALL_SIMPLE)
    def test_fit_stats_ignore_missing(self, cls):
        X = np.array([[1.0, 10.0], [np.nan, 20.0], [3.0, np.nan]])
        imp = cls().fit(X)
        assert np.all(np.isfinite(imp.fill_values_))

    @pytest.mark.parametrize("cls", ALL_SIMPLE)
    def test_fully_missing_column_error(self, cls):
        X = np.array([[1.0, np.nan], [2.0, np.nan]])
        with pytest.raises(ValueError, match="column 1"):
            cls().fit(X)

    @pytest.mark.parametrize("cls", ALL_SIMPLE)
    def test_unfitted_transform_raises(self, cls):
        with pytest.raises(NotFittedError):
            cls().transform(np.ones((2, 2)))

    @pytest.mark.parametrize("cls", ALL_SIMPLE)
    def test_column_count_mismatch(self, cls):
        imp = cls().fit(np.ones((3, 2)))
        with pytest.raises(ValueError, match="columns"):
            imp.transform(np.ones((3, 3)))


class TestSharedContracts:
    @pytest.mark.parametrize("cls", ALL_KINDS)
    def test_observed_cells_untouched_and_output_complete(self, cls):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(40, 3))
        Xm = blank_cells(X, 0.2, seed=1)
        imp = cls()
        out = imp.fit(Xm).transform(Xm)
        kept = ~np.isnan(Xm)
        assert np.array_equal(out[kept], Xm[kept])
        assert not np.isnan(out).any()

    @pytest.mark.parametrize("cls", ALL_KINDS)
    def test_identity_on_complete_input(self, cls):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(25, 3))
        out = cls().fit(X).transform(X)
        assert np.allclose(out, X)


class TestMice:
    def test_exact_linear_relation_recovered(self):
        X, Xm, holes = linear_pair(300, seed=5)
        out = MICEImputer(random_state=3).fit_transform(Xm)
        assert np.max(np.abs(out[holes, 1] - X[holes, 1])) < 1e-6

    def test_transform_sweep_also_recovers_linear(self):
        X, Xm, holes = linear_pair(300, seed=6)
        imp = MICEImputer(random_state=1).fit(Xm)
        X2, X2m, holes2 = linear_pair(100, seed=7)
        out = imp.transform(X2m)
        assert np.max(np.abs(out[holes2, 1] - X2[holes2, 1])) < 1e-6

    def test_max_iter_zero_is_mean_imputation(self):
        _, Xm, _ = linear_pair(100, seed=8)
        out = MICEImputer(max_iter=0, random_state=0).fit_transform(Xm)
        ref = MeanImputer().fit_transform(Xm)
        assert np.allclose(out, ref)

    def test_identical_chain_seeds_pool_to_single_chain(self):
        _, Xm, _ = linear_pair(80, seed=9)
        miss = np.isnan(Xm)
        fills = np.nanmean(Xm, axis=0)
        runs = [
            _mice_chain(Xm, miss, fills, 5, 1e-3, 1e-3, np.random.default_rng(42))
            for _ in range(3)
        ]
        pooled = np.mean(runs, axis=0)
        assert np.allclose(pooled, runs[0], atol=1e-12)

    def test_deterministic_given_state(self):
        _, Xm, _ = linear_pair(60, seed=10)
        a = MICEImputer(random_state=7).fit_transform(Xm)
        b = MICEImputer(random_state=7).fit_transform(Xm)
        c = MICEImputer(random_state=8).fit_transform(Xm)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_single_column_rejected(self):
        X = np.array([[1.0], [np.nan], [3.0]])
        with pytest.raises(ValueError, match="2 columns"):
            MICEImputer().fit(X)

    def test_beats_mean_imputation_on_correlated_data(self):
        wins = 0
        for seed in range(20):
            truth = mvn_sample(1000, rho=0.9, seed=seed)
            Xm = blank_cells(truth, 0.1, seed=1000 + seed)
            holes = np.isnan(Xm)
            mice = MICEImputer(random_state=seed).fit_transform(Xm)
            mean = MeanImputer().fit_transform(Xm)
            rmse_mice = np.sqrt(np.mean((mice[holes] - truth[holes]) ** 2))
            rmse_mean = np.sqrt(np.mean((mean[holes] - truth[holes]) ** 2))
            wins += rmse_mice < rmse_mean
        assert wins >= 18


class TestEm:
    def test_complete_data_gives_sample_moments(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(200, 3))
        imp = EMImputer(ridge=1e-9).fit(X)
        mu = X.mean(axis=0)
        xc = X - mu
        cov = xc.T @ xc / len(X)
        assert np.allclose(imp.mean_, mu)
        assert np.allclose(imp.covariance_, cov, atol=1e-6)

    def test_parameter_recovery_close_to_complete_mle(self):
        truth = mvn_sample(2000, rho=0.8, seed=3)
        Xm = blank_cells(truth, 0.1, seed=4)
        imp = EMImputer(max_iter=50, tol=1e-6).fit(Xm)
        mu_mle = truth.mean(axis=0)
        tc = truth - mu_mle
        cov_mle = tc.T @ tc / len(truth)
        assert np.max(np.abs(imp.mean_ - mu_mle)) < 0.05
        assert np.max(np.abs(imp.covariance_ - cov_mle)) < 0.1

    def test_transform_fills_conditional_mean(self):
        truth = mvn_sample(500, rho=0.8, seed=5)
        Xm = truth.copy()
        Xm[10, 0] = np.nan
        imp = EMImputer(max_iter=30, tol=1e-8, m=1).fit(Xm)
        out = imp.transform(Xm)
        mu, S = imp.mean_, imp.covariance_
        expected = mu[0] + S[0, 1] / S[1, 1] * (Xm[10, 1] - mu[1])
        assert out[10, 0] == pytest.approx(expected, abs=1e-10)

    def test_single_column_fills_mean(self):
        X = np.array([[1.0], [np.nan], [3.0], [4.0], [np.nan], [2.0]])
        out = EMImputer(max_iter=20, tol=1e-10).fit(X).transform(X)
        observed_mean = np.nanmean(X)
        assert np.allclose(out[np.isnan(X[:, 0]), 0], observed_mean, atol=1e-6)

    def test_loglik_monotone_with_tiny_ridge(self):
        truth = mvn_sample(400, rho=0.7, seed=6)
        Xm = blank_cells(truth, 0.15, seed=7)
        imp = EMImputer(max_iter=25, tol=1e-12, ridge=1e-12).fit(Xm)
        path = np.asarray(imp.loglik_path_)
        assert len(path) >= 3
        assert np.all(np.diff(path) >= -1e-8)

    def test_pooled_draws_approach_conditional_mean(self):
        truth = mvn_sample(300, rho=0.8, seed=8)
        Xm = blank_cells(truth, 0.1, seed=9)
        base = EMImputer(m=1, max_iter=20).fit(Xm)
        many = EMImputer(m=200, max_iter=20, random_state=1).fit(Xm)
        holes = np.isnan(Xm)
        a = base.transform(Xm)[holes]
        b = many.transform(Xm)[holes]
        assert not np.array_equal(a, b)
        assert np.max(np.abs(a - b)) < 0.25

    def test_warns_when_rows_not_exceed_cols(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(3, 3))
        with pytest.warns(UserWarning, match="rows"):
            EMImputer(max_iter=1).fit(X)
