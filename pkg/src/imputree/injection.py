"""MCAR missingness injection for complete datasets."""

from dataclasses import dataclass

import numpy as np

from .data import DataMatrix

MAX_REDRAWS = 1000


@dataclass(frozen=True)
class InjectionConfig:
    """Target missing rate over feature cells and the RNG seed."""

    rate: float
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise ValueError(f"rate must be in [0, 1), got {self.rate}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def inject_mcar(data, cfg):
    """Blank exactly round(rate * n_rows * n_cols) feature cells at random.

    Cells are drawn uniformly without replacement over the full feature
    grid; the label column is untouched. Any draw that would leave a row or
    a column with no observed value is rejected and redrawn, because every
    downstream imputer needs at least one observed value per variable and
    per observation; when no rejection occurs, the selection is an exact
    uniform sample. Deterministic for a fixed (data, cfg).
    """
    if not data.complete:
        raise ValueError("input already contains missing cells")
    n, d = data.n_rows, data.n_cols
    count = int(round(cfg.rate * n * d))
    if count == 0:
        return DataMatrix(
            data.values, data.labels, data.col_names, data.label_names, data.label_col
        )
    # keeping >=1 observed cell per row and per column bounds the count
    if count > min(n * (d - 1), d * (n - 1)):
        raise ValueError(
            f"cannot blank {count} of {n * d} cells and still keep every "
            f"row and column partially observed"
        )
    rng = np.random.default_rng(cfg.seed)
    rows = cols = None
    for _ in range(MAX_REDRAWS):
        perm = rng.permutation(n * d)
        cand_rows, cand_cols = np.divmod(perm[:count], d)
        if (
            np.bincount(cand_rows, minlength=n).max() < d
            and np.bincount(cand_cols, minlength=d).max() < n
        ):
            rows, cols = cand_rows, cand_cols
            break
        # a bare prefix violates the guarantee: walk the same permutation,
        # skipping any cell whose removal would empty its row or column
        row_hits = np.zeros(n, dtype=np.int64)
        col_hits = np.zeros(d, dtype=np.int64)
        take_r = np.empty(count, dtype=np.int64)
        take_c = np.empty(count, dtype=np.int64)
        taken = 0
        for flat in perm:
            r, c = divmod(int(flat), d)
            if row_hits[r] == d - 1 or col_hits[c] == n - 1:
                continue
            take_r[taken] = r
            take_c[taken] = c
            row_hits[r] += 1
            col_hits[c] += 1
            taken += 1
            if taken == count:
                break
        if taken == count:
            rows, cols = take_r, take_c
            break
    if rows is None:
        raise ValueError(
            f"no admissible cell selection found in {MAX_REDRAWS} draws at "
            f"rate {cfg.rate}"
        )
    values = data.values.copy()
    values[rows, cols] = np.nan
    return DataMatrix(
        values, data.labels, data.col_names, data.label_names, data.label_col
    )
