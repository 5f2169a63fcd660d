"""Evolution of imputation-aware classification pipelines on tabular data.

The package evolves chain-shaped pipelines (imputer, then transforms,
then a classifier) with strongly-typed genetic programming under a
bi-objective selection scheme that maximizes cross-validated accuracy
while minimizing pipeline length. It ships its own imputers, feature
transforms, and classifiers behind a scikit-learn style fit/transform/
predict API, plus a controlled missing-cell injector and an experiment
harness with rank-based significance reports.
"""

from .analysis import (
    ExperimentRecord,
    frequency_tables,
    holdout_score,
    majority_accuracy,
    pairwise_rank_test,
    read_records,
    write_records,
)
from .classifiers import (
    DecisionTreeClassifier,
    GaussianNB,
    GradientBoostingClassifier,
    KNNClassifier,
    LogisticRegression,
    MultinomialNB,
    RandomForestClassifier,
)
from .data import (
    DataMatrix,
    load_csv,
    stratified_kfold,
    stratified_split,
    write_csv,
)
from .evolve import (
    EvolutionConfig,
    EvolveResult,
    ImputreeClassifier,
    Individual,
    crossover,
    derive_seed,
    evaluate_tree,
    evolve,
    fit_pipeline,
    mutate,
    random_tree,
)
from .grammar import (
    Grammar,
    PipelineNode,
    PrimitiveSpec,
    build_estimator,
    default_grammar,
    parse_tree,
    serialize_tree,
    tree_size,
    validate_tree,
)
from .imputers import (
    EMImputer,
    MaxImputer,
    MeanImputer,
    MedianImputer,
    MFImputer,
    MICEImputer,
)
from .injection import InjectionConfig, inject_mcar
from .nsga2 import (
    crowding_distance,
    dominates,
    fast_non_dominated_sort,
    nsga2_select,
)
from .transforms import (
    PCA,
    MaxAbsScaler,
    MinMaxScaler,
    SelectKBest,
    StandardScaler,
    VarianceThreshold,
)

__version__ = "0.1.0"

__all__ = [
    "DataMatrix",
    "DecisionTreeClassifier",
    "EMImputer",
    "EvolutionConfig",
    "EvolveResult",
    "ExperimentRecord",
    "GaussianNB",
    "GradientBoostingClassifier",
    "Grammar",
    "ImputreeClassifier",
    "Individual",
    "InjectionConfig",
    "KNNClassifier",
    "LogisticRegression",
    "MaxAbsScaler",
    "MaxImputer",
    "MeanImputer",
    "MedianImputer",
    "MFImputer",
    "MICEImputer",
    "MinMaxScaler",
    "MultinomialNB",
    "PCA",
    "PipelineNode",
    "PrimitiveSpec",
    "RandomForestClassifier",
    "SelectKBest",
    "StandardScaler",
    "VarianceThreshold",
    "build_estimator",
    "crossover",
    "crowding_distance",
    "default_grammar",
    "derive_seed",
    "dominates",
    "evaluate_tree",
    "evolve",
    "fast_non_dominated_sort",
    "fit_pipeline",
    "frequency_tables",
    "holdout_score",
    "inject_mcar",
    "load_csv",
    "majority_accuracy",
    "mutate",
    "nsga2_select",
    "pairwise_rank_test",
    "parse_tree",
    "random_tree",
    "read_records",
    "serialize_tree",
    "stratified_kfold",
    "stratified_split",
    "tree_size",
    "validate_tree",
    "write_csv",
    "write_records",
]
