"""Importance-resampled training-data proxies for architecture ranking.

Train two capacity-boundary probe classifiers, score every test sample by
how its probe outcomes relate to the probes' accuracy ranking, transfer that
importance to training samples through a projected feature space, and
resample a small proxy dataset that preserves the relative accuracy ranking
of configurations. Evaluation tools quantify ranking agreement between
accuracy tables.
"""

from .datamodel import (
    DEFAULT_CONSTANTS,
    DatasetManifest,
    FeatureMatrix,
    ImportanceConstants,
    ImportanceTable,
    ProbeOutcomeSet,
    SampleCase,
    SampleId,
)
from .decomposition import PrincipalComponents, fit_pca, project
from .exceptions import (
    ConfigMismatch,
    DataProxyError,
    DegenerateInput,
    DimMismatch,
    EmptyReferenceSet,
    EmptyTestSet,
    FormatError,
    InsufficientSupport,
    MissingImportance,
    MissingOutcome,
    NonFiniteLoss,
    ZeroTotalImportance,
    ZeroVariance,
)
from .harness import (
    CapacityClassifier,
    ClassifierConfig,
    ExperimentReport,
    SearchSpace,
    SyntheticDataset,
    SyntheticDatasetSpec,
    VariantResult,
    build_search_space,
    classification_accuracy,
    derive_train_importance,
    evaluate_probes,
    generate_dataset,
    loss_and_gradients,
    run_experiment,
    summarize_variants,
    train_classifier,
)
from .importance import assign_test_importance, classify_case, normalize_keep_prob
from .neighbors import (
    NearestReferenceIndex,
    build_nn_index,
    nearest_test_sample,
    transfer_importance,
)
from .pipeline import DataProxyGenerator, PipelineResult, build_proxy
from .ranking import (
    AccuracyTable,
    ConfigAccuracy,
    RankingReport,
    agreement_grid_text,
    agreement_matrix,
    best_config_preserved,
    correlation_score,
    flipped_pair_count,
    rank_report,
    render_agreement_figure,
)
from .sampling import (
    LabelStage,
    ProxySelection,
    ProxySpec,
    aggregate_label_importance,
    generate_proxy,
    reduce_labels,
    round_half_up,
    sample_proxy,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracyTable",
    "CapacityClassifier",
    "ClassifierConfig",
    "ConfigAccuracy",
    "ConfigMismatch",
    "DEFAULT_CONSTANTS",
    "DataProxyError",
    "DataProxyGenerator",
    "DatasetManifest",
    "DegenerateInput",
    "DimMismatch",
    "EmptyReferenceSet",
    "EmptyTestSet",
    "ExperimentReport",
    "FeatureMatrix",
    "FormatError",
    "ImportanceConstants",
    "ImportanceTable",
    "InsufficientSupport",
    "LabelStage",
    "MissingImportance",
    "MissingOutcome",
    "NearestReferenceIndex",
    "NonFiniteLoss",
    "PipelineResult",
    "PrincipalComponents",
    "ProbeOutcomeSet",
    "ProxySelection",
    "ProxySpec",
    "RankingReport",
    "SampleCase",
    "SampleId",
    "SearchSpace",
    "SyntheticDataset",
    "SyntheticDatasetSpec",
    "VariantResult",
    "ZeroTotalImportance",
    "ZeroVariance",
    "agreement_grid_text",
    "agreement_matrix",
    "aggregate_label_importance",
    "assign_test_importance",
    "best_config_preserved",
    "build_nn_index",
    "build_proxy",
    "build_search_space",
    "classification_accuracy",
    "classify_case",
    "correlation_score",
    "derive_train_importance",
    "evaluate_probes",
    "fit_pca",
    "flipped_pair_count",
    "generate_dataset",
    "generate_proxy",
    "loss_and_gradients",
    "nearest_test_sample",
    "normalize_keep_prob",
    "project",
    "rank_report",
    "reduce_labels",
    "render_agreement_figure",
    "round_half_up",
    "run_experiment",
    "sample_proxy",
    "summarize_variants",
    "train_classifier",
    "transfer_importance",
]
