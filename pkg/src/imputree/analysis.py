"""Holdout scoring, run records, rank-based significance, frequency tables.

Everything here aggregates over immutable per-run records. Report files
are plain CSV so downstream tooling can consume them; each writer has a
matching reader and the pair round-trips exactly.
"""

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .evolve import fit_pipeline
from .grammar import IMPUTER, chain_nodes


@dataclass(frozen=True)
class ExperimentRecord:
    """One completed evolution run on one dataset variant."""

    dataset_id: str
    run_seed: int
    missing_rate: float
    best_pipeline: str
    holdout_accuracy: float
    imputer_name: Optional[str]
    classifier_name: str
    generations_run: int
    wall_time: float = 0.0

    def __post_init__(self):
        if (self.imputer_name is None) != (self.missing_rate == 0):
            raise ValueError(
                "imputer_name must be present exactly when missing_rate is nonzero"
            )
        if not 0 <= self.holdout_accuracy <= 1:
            raise ValueError("holdout_accuracy must lie in [0, 1]")


def pipeline_component_names(tree):
    """(imputer_name or None, classifier_name) of a pipeline tree."""
    nodes = chain_nodes(tree)
    imputer = next((n.spec.name for n in nodes if n.spec.role == IMPUTER), None)
    return imputer, nodes[0].spec.name


def holdout_score(tree, train, test, seed=0):
    """Refit the pipeline on all of train and return its test accuracy.

    Any estimator failure propagates; the caller records the run as
    failed rather than scoring it.
    """
    fitted = fit_pipeline(tree, train.values, train.labels, seed)
    preds = fitted.predict(test.values)
    return float(np.mean(preds == test.labels))


def majority_accuracy(train_labels, test_labels):
    """Accuracy of always predicting train's most frequent class.

    Count ties go to the smaller class id.
    """
    counts = np.bincount(np.asarray(train_labels))
    majority = int(np.argmax(counts))
    return float(np.mean(np.asarray(test_labels) == majority))


def _midranks(pooled):
    """Ranks 1..N with tied values sharing their average rank."""
    order = np.argsort(pooled, kind="stable")
    ranks = np.empty(len(pooled))
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def pairwise_rank_test(x, y):
    """Two-sided rank z-test between two equal-length accuracy samples.

    Pools both samples, assigns mid-ranks to ties, and compares mean
    ranks with the tie-corrected variance
    N(N+1)/12 - sum(t^3 - t) / (12 (N-1)). Returns the two-sided normal
    p-value; identical pooled values give 1.0.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1 or len(x) != len(y):
        raise ValueError("samples must be 1-D and of equal length")
    n = len(x)
    if n < 5:
        raise ValueError("need at least 5 accuracies per sample")
    pooled = np.concatenate([x, y])
    if np.all(pooled == pooled[0]):
        return 1.0
    ranks = _midranks(pooled)
    total = 2 * n
    _, tie_sizes = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(tie_sizes.astype(float) ** 3 - tie_sizes))
    variance = total * (total + 1) / 12 - tie_term / (12 * (total - 1))
    if variance <= 0:
        return 1.0
    mean_diff = ranks[:n].mean() - ranks[n:].mean()
    z = mean_diff / math.sqrt(variance * (2 / n))
    return float(math.erfc(abs(z) / math.sqrt(2)))


def frequency_tables(records):
    """Imputer and imputer-classifier usage tables over missing-data runs.

    Returns (imputer_counts, pair_counts, pair_dataset_coverage) where
    imputer_counts[dataset][imputer] counts runs whose best pipeline used
    that imputer, pair_counts[(imputer, classifier)] counts runs using
    the pair, and pair_dataset_coverage[(imputer, classifier)] counts
    distinct datasets where the pair showed up at least once. Runs on
    complete data carry no imputer and enter no table.
    """
    if not records:
        raise ValueError("no records to aggregate")
    imputer_counts = {}
    pair_counts = {}
    pair_datasets = {}
    for rec in records:
        if rec.imputer_name is None:
            continue
        per_data = imputer_counts.setdefault(rec.dataset_id, {})
        per_data[rec.imputer_name] = per_data.get(rec.imputer_name, 0) + 1
        pair = (rec.imputer_name, rec.classifier_name)
        pair_counts[pair] = pair_counts.get(pair, 0) + 1
        pair_datasets.setdefault(pair, set()).add(rec.dataset_id)
    coverage = {pair: len(ds) for pair, ds in pair_datasets.items()}
    return imputer_counts, pair_counts, coverage


# --- report files -----------------------------------------------------------

RECORD_COLUMNS = [
    "dataset_id",
    "run_seed",
    "missing_rate",
    "best_pipeline",
    "holdout_accuracy",
    "imputer_name",
    "classifier_name",
    "generations_run",
]


def write_records(path, records):
    """records.csv; wall time is volatile and deliberately not persisted,
    so identical runs produce identical bytes."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.dataset_id,
                    r.run_seed,
                    repr(float(r.missing_rate)),
                    r.best_pipeline,
                    repr(float(r.holdout_accuracy)),
                    "" if r.imputer_name is None else r.imputer_name,
                    r.classifier_name,
                    r.generations_run,
                ]
            )


def read_records(path):
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RECORD_COLUMNS:
            raise ValueError(f"unexpected records header in {path}")
        for row in reader:
            records.append(
                ExperimentRecord(
                    dataset_id=row["dataset_id"],
                    run_seed=int(row["run_seed"]),
                    missing_rate=float(row["missing_rate"]),
                    best_pipeline=row["best_pipeline"],
                    holdout_accuracy=float(row["holdout_accuracy"]),
                    imputer_name=row["imputer_name"] or None,
                    classifier_name=row["classifier_name"],
                    generations_run=int(row["generations_run"]),
                )
            )
    return records


def canonical_record_order(records):
    """Stable report order: dataset, then arm (missing first), then seed."""
    return sorted(
        records, key=lambda r: (r.dataset_id, -r.missing_rate, r.run_seed)
    )


def write_imputer_freq(path, imputer_counts):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset_id", "imputer", "count"])
        for dataset in sorted(imputer_counts):
            for imputer in sorted(imputer_counts[dataset]):
                writer.writerow([dataset, imputer, imputer_counts[dataset][imputer]])


def read_imputer_freq(path):
    counts = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            counts.setdefault(row["dataset_id"], {})[row["imputer"]] = int(row["count"])
    return counts


def write_pair_freq(path, pair_counts, coverage):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["imputer", "classifier", "run_count", "dataset_coverage"])
        for pair in sorted(pair_counts):
            writer.writerow([pair[0], pair[1], pair_counts[pair], coverage[pair]])


def read_pair_freq(path):
    pair_counts = {}
    coverage = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            pair = (row["imputer"], row["classifier"])
            pair_counts[pair] = int(row["run_count"])
            coverage[pair] = int(row["dataset_coverage"])
    return pair_counts, coverage


def write_significance(path, rows):
    """rows: (dataset_id, p_value) pairs; the flag applies the 0.05 cut."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset_id", "p_value", "significant"])
        for dataset, p in rows:
            writer.writerow([dataset, repr(float(p)), "true" if p < 0.05 else "false"])


def read_significance(path):
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append(
                (row["dataset_id"], float(row["p_value"]), row["significant"] == "true")
            )
    return rows
