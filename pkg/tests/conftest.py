"""Shared fixtures and dataset builders for the test suite."""

import numpy as np
import pytest

from imputree.data import DataMatrix


def make_blobs_matrix(n_rows, n_cols, n_classes, seed, spread=4.0, scale=1.0):
    """Well-separated Gaussian class blobs as a DataMatrix."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, spread, size=(n_classes, n_cols))
    labels = np.arange(n_rows, dtype=np.int64) % n_classes
    rng.shuffle(labels)
    values = centers[labels] + rng.normal(0.0, scale, size=(n_rows, n_cols))
    names = [f"f{j}" for j in range(n_cols)]
    class_names = [f"c{k}" for k in range(n_classes)]
    return DataMatrix(values, labels, names, class_names)


@pytest.fixture
def small_matrix():
    values = np.array([[1.0, 2.0], [3.0, np.nan], [5.0, 6.0], [7.0, 8.0]])
    labels = np.array([0, 1, 0, 1])
    return DataMatrix(values, labels, ["a", "b"], ["no", "yes"])


@pytest.fixture
def blobs():
    return make_blobs_matrix(120, 4, 3, seed=7)
