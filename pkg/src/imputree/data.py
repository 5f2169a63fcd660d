"""Tabular data container, CSV ingestion and deterministic splitting.

A dataset is a numeric feature grid with optional missing cells (stored as
NaN) plus one categorical class-label column. Label strings are mapped to
dense integer ids in sorted order at load time.
"""

import csv
import math
from typing import NamedTuple

import numpy as np

DEFAULT_MISSING_TOKENS = frozenset({"", "NaN", "NA", "?"})


class DataMatrix:
    """Immutable numeric table with a label column.

    Parameters
    ----------
    values : (n_rows, n_cols) float array
        Feature cells; NaN marks a missing cell.
    labels : (n_rows,) int array
        Dense class ids, never missing.
    col_names : sequence of str
        One name per feature column.
    label_names : sequence of str
        Class name for each dense id.
    label_col : str
        Header name of the label column, kept for CSV round-trips.

    The completeness tag is recomputed by a full scan at construction, so
    ``complete`` is always consistent with the cells.
    """

    def __init__(self, values, labels, col_names, label_names, label_col="class"):
        values = np.asarray(values, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        if values.ndim != 2:
            raise ValueError("values must be 2-D")
        n_rows, n_cols = values.shape
        if n_rows < 2:
            raise ValueError(f"need at least 2 rows, got {n_rows}")
        if n_cols < 1:
            raise ValueError("need at least 1 feature column")
        if labels.shape != (n_rows,):
            raise ValueError(
                f"labels length {labels.shape} does not match {n_rows} rows"
            )
        if len(col_names) != n_cols:
            raise ValueError("col_names length does not match columns")
        if np.isinf(values).any():
            raise ValueError("values contain infinities")
        if labels.min() < 0 or labels.max() >= len(label_names):
            raise ValueError("label id outside label_names range")
        self.values = values.copy()
        self.labels = labels.copy()
        self.values.setflags(write=False)
        self.labels.setflags(write=False)
        self.col_names = tuple(col_names)
        self.label_names = tuple(label_names)
        self.label_col = label_col
        self.complete = not bool(np.isnan(self.values).any())

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_cols(self):
        return self.values.shape[1]

    @property
    def n_classes(self):
        return len(self.label_names)

    def subset(self, row_indices):
        """New DataMatrix holding the given rows (same column metadata)."""
        row_indices = np.asarray(row_indices)
        return DataMatrix(
            self.values[row_indices],
            self.labels[row_indices],
            self.col_names,
            self.label_names,
            self.label_col,
        )

    def __eq__(self, other):
        if not isinstance(other, DataMatrix):
            return NotImplemented
        return (
            self.col_names == other.col_names
            and self.label_names == other.label_names
            and self.label_col == other.label_col
            and np.array_equal(self.values, other.values, equal_nan=True)
            and np.array_equal(self.labels, other.labels)
        )

    def __repr__(self):
        tag = "Complete" if self.complete else "MayContainMissing"
        return f"DataMatrix({self.n_rows}x{self.n_cols}, {self.n_classes} classes, {tag})"


class SplitPair(NamedTuple):
    train: DataMatrix
    test: DataMatrix
    train_fraction: float
    seed: int


class ColumnStats(NamedTuple):
    mean: float
    median: float
    mode: float
    max: float
    observed_count: int


def load_csv(path, missing_tokens=DEFAULT_MISSING_TOKENS):
    """Read a CSV with a header row and the class label in the last column.

    Feature cells must parse as finite reals unless they match one of
    ``missing_tokens`` (compared after stripping whitespace). The empty
    string is always treated as missing. Labels may never be missing.
    """
    missing_tokens = set(missing_tokens) | {""}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        if len(header) < 2:
            raise ValueError(f"{path}: need at least one feature column plus a label")
        n_fields = len(header)
        rows = []
        raw_labels = []
        for r, row in enumerate(reader):
            if len(row) != n_fields:
                raise ValueError(
                    f"{path}: row {r} has {len(row)} fields, expected {n_fields}"
                )
            label = row[-1].strip()
            if label in missing_tokens:
                raise ValueError(f"{path}: row {r} has a missing class label")
            raw_labels.append(label)
            parsed = np.empty(n_fields - 1)
            for c, tok in enumerate(row[:-1]):
                tok = tok.strip()
                if tok in missing_tokens:
                    parsed[c] = np.nan
                    continue
                try:
                    v = float(tok)
                except ValueError:
                    raise ValueError(
                        f"{path}: row {r}, column {header[c]!r}: "
                        f"cannot parse {tok!r} as a number"
                    ) from None
                if not math.isfinite(v):
                    raise ValueError(
                        f"{path}: row {r}, column {header[c]!r}: "
                        f"non-finite value {tok!r} (add it to the missing tokens "
                        f"if it marks a missing cell)"
                    )
                parsed[c] = v
            rows.append(parsed)
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least 2 data rows, got {len(rows)}")
    label_names = sorted(set(raw_labels))
    label_ids = {name: i for i, name in enumerate(label_names)}
    labels = np.array([label_ids[s] for s in raw_labels], dtype=np.int64)
    return DataMatrix(
        np.vstack(rows), labels, header[:-1], label_names, label_col=header[-1]
    )


def write_csv(data, path):
    """Inverse of load_csv: missing cells become empty fields.

    Floats are formatted with repr, so a load/write/load round-trip is
    value-exact.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(data.col_names) + [data.label_col])
        for i in range(data.n_rows):
            fields = [
                "" if np.isnan(v) else repr(float(v)) for v in data.values[i]
            ]
            fields.append(data.label_names[data.labels[i]])
            writer.writerow(fields)


def _largest_remainder_quotas(counts, fraction, total):
    """Per-class integer quotas summing to total, largest-remainder rounding.

    Remainder ties go to the lower class id.
    """
    exact = counts * fraction
    base = np.floor(exact).astype(np.int64)
    remaining = total - int(base.sum())
    if remaining < 0:
        order = np.lexsort((np.arange(len(counts)), exact - base))
        for c in order[: -remaining]:
            base[c] -= 1
        return base
    order = np.lexsort((np.arange(len(counts)), -(exact - base)))
    for c in order[:remaining]:
        base[c] += 1
    return base


def stratified_split(data, train_fraction, seed, stratify=True):
    """Deterministic train/test row partition.

    With stratify=True each class contributes a largest-remainder share of
    the train quota, so per-class counts stay within one row of exact
    proportionality. Identical (data, train_fraction, seed) always gives
    the identical assignment.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = data.n_rows
    total_train = int(round(train_fraction * n))
    rng = np.random.default_rng(seed)
    if stratify:
        counts = np.bincount(data.labels, minlength=data.n_classes)
        present = np.flatnonzero(counts)
        for c in present:
            if counts[c] == 1:
                raise ValueError(
                    f"class {data.label_names[c]!r} has a single member; "
                    f"cannot split"
                )
        quotas = np.zeros(data.n_classes, dtype=np.int64)
        quotas[present] = _largest_remainder_quotas(
            counts[present].astype(float), train_fraction, total_train
        )
        train_parts = []
        for c in present:
            members = np.flatnonzero(data.labels == c)
            perm = rng.permutation(len(members))
            train_parts.append(members[perm[: quotas[c]]])
        train_idx = np.sort(np.concatenate(train_parts))
    else:
        perm = rng.permutation(n)
        train_idx = np.sort(perm[:total_train])
    mask = np.zeros(n, dtype=bool)
    mask[train_idx] = True
    test_idx = np.flatnonzero(~mask)
    if len(train_idx) < 2 or len(test_idx) < 2:
        raise ValueError(
            f"split leaves {len(train_idx)} train / {len(test_idx)} test rows; "
            f"need at least 2 on each side"
        )
    return SplitPair(
        data.subset(train_idx), data.subset(test_idx), train_fraction, seed
    )


def stratified_kfold(labels, n_folds, seed):
    """Assign each row to one of n_folds folds, preserving class balance.

    Rows of each class are shuffled with the seed and dealt round-robin, so
    fold class counts differ by at most one. Returns the fold id per row.
    """
    if n_folds < 2:
        raise ValueError("need at least 2 folds")
    labels = np.asarray(labels)
    fold_id = np.empty(len(labels), dtype=np.int64)
    rng = np.random.default_rng(seed)
    offset = 0
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        perm = rng.permutation(len(members))
        fold_id[members[perm]] = (offset + np.arange(len(members))) % n_folds
        offset += len(members)
    return fold_id


def kfold_indices(labels, n_folds, seed):
    """(train_idx, val_idx) pairs for stratified_kfold assignments."""
    fold_id = stratified_kfold(labels, n_folds, seed)
    pairs = []
    for k in range(n_folds):
        val = np.flatnonzero(fold_id == k)
        train = np.flatnonzero(fold_id != k)
        pairs.append((train, val))
    return pairs


def column_stats(data, col):
    """Mean, median, mode, max and count over the observed cells of a column.

    Mode ties break toward the smallest value. A fully missing column is an
    error; imputers must reject such data upstream.
    """
    column = data.values[:, col]
    observed = column[~np.isnan(column)]
    if observed.size == 0:
        raise ValueError(f"column {data.col_names[col]!r} has no observed values")
    uniq, counts = np.unique(observed, return_counts=True)
    mode = uniq[np.argmax(counts)]
    return ColumnStats(
        mean=float(observed.mean()),
        median=float(np.median(observed)),
        mode=float(mode),
        max=float(observed.max()),
        observed_count=int(observed.size),
    )
