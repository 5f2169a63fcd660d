"""Small input-validation helpers shared by all estimators."""

import numpy as np
from sklearn.exceptions import NotFittedError


def check_array(X, allow_nan=False):
    """Coerce X to a 2-D float64 array and reject bad values.

    NaN marks a missing cell and is only accepted when allow_nan is True.
    Infinities are never accepted.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D array, got {X.ndim}-D")
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError("empty array")
    if np.isinf(X).any():
        raise ValueError("array contains infinite values")
    if not allow_nan and np.isnan(X).any():
        raise ValueError("array contains missing values (NaN)")
    return X


def check_X_y(X, y, allow_nan=False):
    X = check_array(X, allow_nan=allow_nan)
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError("y must be 1-D")
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    return X, y


def check_is_fitted(estimator, attribute):
    if not hasattr(estimator, attribute):
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit first"
        )


def check_n_features(estimator, X, n_features):
    if X.shape[1] != n_features:
        raise ValueError(
            f"{type(estimator).__name__} was fitted with {n_features} columns "
            f"but got {X.shape[1]}"
        )
