"""End-to-end proxy generation over ingested artifacts.

Wires the stages together: probe outcomes to test importance, feature
projection, nearest-neighbor transfer to the train split, and resampling.
Available both as a plain function and as an estimator-style wrapper.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from sklearn.base import BaseEstimator

from .datamodel import (
    DatasetManifest,
    FeatureMatrix,
    ImportanceConstants,
    ImportanceTable,
    ProbeOutcomeSet,
    SampleCase,
)
from .decomposition import fit_pca
from .exceptions import DegenerateInput, DimMismatch, MissingOutcome
from .importance import assign_test_importance, normalize_keep_prob
from .neighbors import build_nn_index, transfer_importance
from .sampling import LabelStage, ProxySelection, ProxySpec, generate_proxy


@dataclass(frozen=True)
class PipelineResult:
    """Everything one proxy-generation run produces."""

    selection: ProxySelection
    test_importance: ImportanceTable
    train_importance: ImportanceTable
    case_counts: dict


def _reorder(features: FeatureMatrix, ids: tuple, what: str) -> FeatureMatrix:
    """Align a feature matrix to the manifest's id order."""
    have = set(features.sample_ids)
    want = set(ids)
    if have != want:
        missing = sorted(want - have)[:5]
        extra = sorted(have - want)[:5]
        raise DegenerateInput(
            f"{what} features must cover exactly the manifest ids "
            f"(missing={missing}, extra={extra})"
        )
    if features.sample_ids == tuple(ids):
        return features
    position = {sid: i for i, sid in enumerate(features.sample_ids)}
    rows = [position[sid] for sid in ids]
    return FeatureMatrix(sample_ids=tuple(ids), data=features.data[rows])


def _check_outcome_coverage(manifest: DatasetManifest, outcomes: ProbeOutcomeSet) -> None:
    have = set(outcomes.test_ids)
    missing = [sid for sid in manifest.test_ids if sid not in have]
    if missing:
        raise MissingOutcome(
            f"outcomes miss {len(missing)} test id(s), e.g. {missing[:3]}"
        )
    extra = sorted(have - set(manifest.test_ids))
    if extra:
        raise DegenerateInput(f"outcomes carry ids not in the manifest test split: {extra[:3]}")


def build_proxy(
    manifest: DatasetManifest,
    outcomes: ProbeOutcomeSet,
    train_features: FeatureMatrix,
    test_features: FeatureMatrix,
    spec: ProxySpec,
    pca_dim: int | None = None,
    metric: str = "euclidean",
) -> PipelineResult:
    """Generate a proxy selection from probe outcomes and features.

    The projection basis is fit on the test-side features (the split where
    importance is defined) and shared by both splits; the default dimension
    is 64, clamped to what the test matrix supports.
    """
    _check_outcome_coverage(manifest, outcomes)
    train_features = _reorder(train_features, manifest.train_ids, "train")
    test_features = _reorder(test_features, manifest.test_ids, "test")
    if train_features.dim != test_features.dim:
        raise DimMismatch(
            f"train features have dim {train_features.dim}, test features {test_features.dim}"
        )

    test_importance, cases = assign_test_importance(outcomes, spec.constants)
    test_importance = normalize_keep_prob(test_importance)

    limit = min(test_features.dim, len(test_features.sample_ids))
    target_dim = min(64, limit) if pca_dim is None else int(pca_dim)
    pca = fit_pca(test_features.data, target_dim)
    projected_test = FeatureMatrix(test_features.sample_ids, pca.transform(test_features.data))
    projected_train = FeatureMatrix(train_features.sample_ids, pca.transform(train_features.data))

    index = build_nn_index(projected_test, metric)
    train_importance = transfer_importance(projected_train, index, test_importance)
    selection = generate_proxy(manifest, train_importance, spec)
    case_counts = dict(Counter(case.value for case in cases.values()))
    for case in SampleCase:
        case_counts.setdefault(case.value, 0)
    return PipelineResult(
        selection=selection,
        test_importance=test_importance,
        train_importance=normalize_keep_prob(train_importance),
        case_counts=case_counts,
    )


class DataProxyGenerator(BaseEstimator):
    """Estimator-style front end for :func:`build_proxy`.

    Parameters mirror the proxy spec; ``fit`` ingests the artifacts and
    exposes the selection and importance tables as fitted attributes.
    """

    def __init__(
        self,
        target_ratio: float = 0.1,
        seed: int = 0,
        constants: tuple = (2.0, 1.0, 6.0, 1.0),
        metric: str = "euclidean",
        pca_dim: int | None = None,
        label_stage_mode: str | None = None,
        intermediate_ratio: float | None = None,
    ):
        self.target_ratio = target_ratio
        self.seed = seed
        self.constants = constants
        self.metric = metric
        self.pca_dim = pca_dim
        self.label_stage_mode = label_stage_mode
        self.intermediate_ratio = intermediate_ratio

    def _spec(self) -> ProxySpec:
        stage = None
        if self.label_stage_mode is not None:
            if self.intermediate_ratio is None:
                raise DegenerateInput("label_stage_mode requires intermediate_ratio")
            stage = LabelStage(
                intermediate_ratio=self.intermediate_ratio, mode=self.label_stage_mode
            )
        return ProxySpec(
            target_ratio=self.target_ratio,
            seed=self.seed,
            label_stage=stage,
            constants=ImportanceConstants(*self.constants),
        )

    def fit(
        self,
        manifest: DatasetManifest,
        outcomes: ProbeOutcomeSet,
        train_features: FeatureMatrix,
        test_features: FeatureMatrix,
    ):
        result = build_proxy(
            manifest,
            outcomes,
            train_features,
            test_features,
            self._spec(),
            pca_dim=self.pca_dim,
            metric=self.metric,
        )
        self.selection_ = result.selection
        self.test_importance_ = result.test_importance
        self.train_importance_ = result.train_importance
        self.case_counts_ = result.case_counts
        return self
