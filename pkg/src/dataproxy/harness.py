"""Desk-scale experiment harness: synthetic data, tiny classifiers, pipelines.

Stands in for the GPU experiments the method is aimed at. Generates Gaussian
cluster datasets whose difficulty is controllable, trains a family of small
softmax classifiers spanning a capacity range, and runs the whole
proxy-versus-random comparison end to end. Everything is deterministic under
the declared seeds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .datamodel import (
    DEFAULT_CONSTANTS,
    DatasetManifest,
    FeatureMatrix,
    ImportanceConstants,
    ImportanceTable,
    ProbeOutcomeSet,
    SampleId,
)
from .decomposition import fit_pca
from .exceptions import DegenerateInput, NonFiniteLoss
from .importance import assign_test_importance
from .neighbors import build_nn_index, transfer_importance
from .ranking import AccuracyTable, ConfigAccuracy, RankingReport, rank_report
from .sampling import LabelStage, ProxySpec, generate_proxy
from .validation import as_float_matrix, as_int_vector, check_fitted

# Distance between cluster centers in units of cluster_spread at zero overlap.
_CENTER_SEPARATION = 6.0

# Margin over chance accuracy below which a training run counts as
# non-converged.
NON_CONVERGED_MARGIN = 0.02


@dataclass(frozen=True)
class SyntheticDatasetSpec:
    """Shape and difficulty of a synthetic classification dataset.

    ``label_overlap`` interpolates between well-separated anisotropic
    clusters (0) and fully coincident isotropic ones (1); in between,
    classifier accuracy rises meaningfully with model capacity.
    """

    num_labels: int = 10
    samples_per_label_train: int = 500
    samples_per_label_test: int = 300
    feature_dim: int = 8
    cluster_spread: float = 1.0
    label_overlap: float = 0.8
    seed: int = 7

    def __post_init__(self):
        if self.num_labels < 1 or self.samples_per_label_train < 1 or self.samples_per_label_test < 1:
            raise DegenerateInput("all counts must be >= 1")
        if self.feature_dim < 2:
            raise DegenerateInput(f"feature_dim must be >= 2, got {self.feature_dim}")
        if not (0.0 <= self.label_overlap <= 1.0):
            raise DegenerateInput(f"label_overlap must be in [0, 1], got {self.label_overlap}")
        if self.cluster_spread <= 0:
            raise DegenerateInput(f"cluster_spread must be positive, got {self.cluster_spread}")


@dataclass(frozen=True)
class SyntheticDataset:
    """A generated dataset: manifest plus raw arrays aligned with it."""

    manifest: DatasetManifest
    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray

    def train_rows(self, sample_ids: Sequence[SampleId]) -> tuple[np.ndarray, np.ndarray]:
        """Feature/label arrays for a subset of train ids, in the given order."""
        position = {sid: i for i, sid in enumerate(self.manifest.train_ids)}
        idx = np.array([position[sid] for sid in sample_ids], dtype=int)
        return self.train_x[idx], self.train_y[idx]


def generate_dataset(spec: SyntheticDatasetSpec) -> SyntheticDataset:
    """Sample one Gaussian cluster per label, difficulty set by the spec.

    Each label gets a center on a (near-)orthogonal direction and its own
    anisotropic shape; ``label_overlap`` shrinks centers toward the origin
    and shapes toward isotropic, so at overlap 1 all labels share one
    distribution and no classifier can beat chance.  Shapes decay on a
    square-root schedule so that at moderate overlap the label boundaries
    stay curved: a linear model then trails wider networks instead of
    matching them, which keeps probe capacity informative.
    """
    rng = np.random.default_rng(spec.seed)
    d, k = spec.feature_dim, spec.num_labels
    mix = 1.0 - spec.label_overlap

    if k <= d:
        q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        directions = q[:, :k].T
    else:
        raw = rng.standard_normal((k, d))
        directions = raw / np.linalg.norm(raw, axis=1, keepdims=True)
    centers = directions * (_CENTER_SEPARATION * spec.cluster_spread * mix)

    shape_mix = mix ** 0.5
    shapes = []
    for _ in range(k):
        q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        scales = rng.uniform(0.4, 1.8, size=d)
        shapes.append(shape_mix * (q * scales) + (1.0 - shape_mix) * np.eye(d))

    def draw(label: int, count: int) -> np.ndarray:
        z = rng.standard_normal((count, d))
        return centers[label] + spec.cluster_spread * z @ shapes[label].T

    train_x = np.vstack([draw(label, spec.samples_per_label_train) for label in range(k)])
    test_x = np.vstack([draw(label, spec.samples_per_label_test) for label in range(k)])
    train_y = np.repeat(np.arange(k), spec.samples_per_label_train)
    test_y = np.repeat(np.arange(k), spec.samples_per_label_test)

    train_ids = tuple(f"train-{i:05d}" for i in range(train_x.shape[0]))
    test_ids = tuple(f"test-{i:05d}" for i in range(test_x.shape[0]))
    labels = {sid: int(y) for sid, y in zip(train_ids, train_y)}
    labels.update({sid: int(y) for sid, y in zip(test_ids, test_y)})
    manifest = DatasetManifest(
        train_ids=train_ids, test_ids=test_ids, labels=labels, num_labels=k
    )
    return SyntheticDataset(
        manifest=manifest, train_x=train_x, train_y=train_y, test_x=test_x, test_y=test_y
    )


@dataclass(frozen=True)
class ClassifierConfig:
    """One point in the capacity search space."""

    config_id: str
    hidden_width: int
    epochs: int
    learning_rate: float
    seed: int
    batch_size: int = 32

    def __post_init__(self):
        if not self.config_id:
            raise DegenerateInput("config_id must be non-empty")
        if self.hidden_width < 0:
            raise DegenerateInput(f"hidden_width must be >= 0, got {self.hidden_width}")
        if self.epochs < 0:
            raise DegenerateInput(f"epochs must be >= 0, got {self.epochs}")
        if self.learning_rate <= 0:
            raise DegenerateInput(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise DegenerateInput(f"batch_size must be >= 1, got {self.batch_size}")

    def describe(self) -> dict[str, str]:
        return {"width": str(self.hidden_width), "lr": f"{self.learning_rate:g}"}


@dataclass(frozen=True)
class SearchSpace:
    """An ordered config family with designated capacity boundary configs."""

    configs: tuple[ClassifierConfig, ...]
    lower_id: str
    upper_id: str

    def __post_init__(self):
        object.__setattr__(self, "configs", tuple(self.configs))
        ids = [c.config_id for c in self.configs]
        if len(set(ids)) != len(ids):
            raise DegenerateInput("config ids must be unique")
        for role, cid in (("lower", self.lower_id), ("upper", self.upper_id)):
            if cid not in ids:
                raise DegenerateInput(f"{role} config {cid!r} not in search space")
        if self.lower_id == self.upper_id:
            raise DegenerateInput("lower and upper configs must be distinct")

    def by_id(self, config_id: str) -> ClassifierConfig:
        return {c.config_id: c for c in self.configs}[config_id]


def build_search_space(
    widths: Sequence[int] = (0, 4, 8, 16, 32, 64),
    learning_rates: Sequence[float] = (0.03, 0.1),
    epochs: int = 30,
    batch_size: int = 32,
    base_seed: int = 1234,
) -> SearchSpace:
    """Cross hidden widths with learning rates into a numbered search space.

    The lower boundary is the smallest width at the smallest learning rate;
    the upper boundary is the largest width at the largest learning rate.
    Config training seeds derive from ``base_seed`` and the config's index,
    so they do not depend on which data subset a config is trained on.
    """
    if not widths or not learning_rates:
        raise DegenerateInput("need at least one width and one learning rate")
    configs = []
    for i, (width, lr) in enumerate((w, lr) for w in widths for lr in learning_rates):
        seed = int(np.random.SeedSequence([int(base_seed), i]).generate_state(1, np.uint64)[0])
        configs.append(
            ClassifierConfig(
                config_id=str(i + 1),
                hidden_width=int(width),
                epochs=epochs,
                learning_rate=float(lr),
                seed=seed,
                batch_size=batch_size,
            )
        )
    return SearchSpace(
        configs=tuple(configs),
        lower_id=configs[0].config_id,
        upper_id=configs[-1].config_id,
    )


def loss_and_gradients(
    weights: Mapping[str, np.ndarray], X: np.ndarray, y: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy of the softmax classifier and its analytic gradients.

    ``weights`` either has the hidden-layer keys W1/b1/W2/b2 (tanh hidden
    layer) or just W2/b2 (linear model on raw inputs).
    """
    n = X.shape[0]
    if "W1" in weights:
        pre = X @ weights["W1"] + weights["b1"]
        hidden = np.tanh(pre)
    else:
        hidden = X
    logits = hidden @ weights["W2"] + weights["b2"]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_prob = shifted - log_norm
    loss = float(-log_prob[np.arange(n), y].mean())

    prob = np.exp(log_prob)
    delta = prob
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grads = {"W2": hidden.T @ delta, "b2": delta.sum(axis=0)}
    if "W1" in weights:
        back = (delta @ weights["W2"].T) * (1.0 - hidden**2)
        grads["W1"] = X.T @ back
        grads["b1"] = back.sum(axis=0)
    return loss, grads


class CapacityClassifier(ClassifierMixin, BaseEstimator):
    """Softmax classifier with an optional tanh hidden layer, trained by SGD.

    ``hidden_width`` 0 means a linear model whose penultimate features are
    the raw inputs; otherwise the hidden activations serve as features.
    Initialization and epoch shuffling are seeded, so training is fully
    deterministic.
    """

    def __init__(
        self,
        hidden_width: int = 0,
        epochs: int = 30,
        learning_rate: float = 0.1,
        batch_size: int = 32,
        seed: int = 0,
        num_labels: int | None = None,
    ):
        self.hidden_width = hidden_width
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.seed = seed
        self.num_labels = num_labels

    def fit(self, X, y):
        X = as_float_matrix(X, "X", min_rows=1)
        y = as_int_vector(y, "y")
        if y.shape[0] != X.shape[0]:
            raise DegenerateInput(f"{X.shape[0]} rows but {y.shape[0]} labels")
        k = int(y.max()) + 1 if self.num_labels is None else int(self.num_labels)
        if y.min() < 0 or y.max() >= k:
            raise DegenerateInput(f"labels must lie in [0, {k})")

        rng = np.random.default_rng(self.seed)
        d, h = X.shape[1], int(self.hidden_width)
        weights: dict[str, np.ndarray] = {}
        if h > 0:
            weights["W1"] = rng.standard_normal((d, h)) / np.sqrt(d)
            weights["b1"] = np.zeros(h)
        fan_in = h if h > 0 else d
        weights["W2"] = rng.standard_normal((fan_in, k)) / np.sqrt(fan_in)
        weights["b2"] = np.zeros(k)

        history = [loss_and_gradients(weights, X, y)[0]]
        n = X.shape[0]
        for epoch in range(int(self.epochs)):
            order = rng.permutation(n)
            for start in range(0, n, int(self.batch_size)):
                batch = order[start : start + int(self.batch_size)]
                loss, grads = loss_and_gradients(weights, X[batch], y[batch])
                if not np.isfinite(loss):
                    raise NonFiniteLoss(
                        f"loss became non-finite at epoch {epoch}, batch offset {start} "
                        f"(width={h}, lr={self.learning_rate})"
                    )
                for key, grad in grads.items():
                    weights[key] -= self.learning_rate * grad
            history.append(loss_and_gradients(weights, X, y)[0])

        self.weights_ = weights
        self.loss_history_ = tuple(history)
        self.final_train_loss_ = history[-1]
        self.n_features_in_ = d
        self.n_labels_ = k
        return self

    def decision_function(self, X) -> np.ndarray:
        check_fitted(self, "weights_")
        hidden = self.penultimate(X)
        return hidden @ self.weights_["W2"] + self.weights_["b2"]

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.decision_function(X), axis=1)

    def penultimate(self, X) -> np.ndarray:
        """Feature vectors: hidden activations, or raw inputs for width 0."""
        check_fitted(self, "weights_")
        X = as_float_matrix(X, "X", min_rows=1)
        if "W1" in self.weights_:
            return np.tanh(X @ self.weights_["W1"] + self.weights_["b1"])
        return X


def train_classifier(
    config: ClassifierConfig,
    dataset: SyntheticDataset,
    sample_ids: Sequence[SampleId] | None = None,
) -> CapacityClassifier:
    """Train one config on the dataset's train split (or a subset of it)."""
    if sample_ids is None:
        X, y = dataset.train_x, dataset.train_y
    else:
        X, y = dataset.train_rows(sample_ids)
    clf = CapacityClassifier(
        hidden_width=config.hidden_width,
        epochs=config.epochs,
        learning_rate=config.learning_rate,
        batch_size=config.batch_size,
        seed=config.seed,
        num_labels=dataset.manifest.num_labels,
    )
    return clf.fit(X, y)


def classification_accuracy(clf: CapacityClassifier, X, y) -> float:
    return float((clf.predict(X) == np.asarray(y)).mean())


def evaluate_probes(
    lower: CapacityClassifier, upper: CapacityClassifier, dataset: SyntheticDataset
) -> ProbeOutcomeSet:
    """Per-test-sample correctness of the two boundary classifiers."""
    return ProbeOutcomeSet.from_flags(
        test_ids=dataset.manifest.test_ids,
        lower_flags=lower.predict(dataset.test_x) == dataset.test_y,
        upper_flags=upper.predict(dataset.test_x) == dataset.test_y,
    )


@dataclass(frozen=True)
class VariantResult:
    """One (method, ratio, seed) leg of an experiment."""

    method: str
    ratio: float
    seed: int
    proxy_seed: int
    kept_labels: tuple[int, ...]
    table: AccuracyTable
    report: RankingReport
    non_converged: tuple[str, ...]


@dataclass(frozen=True)
class ExperimentReport:
    """Full proxy-versus-random comparison over a synthetic dataset."""

    original: AccuracyTable
    original_non_converged: tuple[str, ...]
    variants: tuple[VariantResult, ...]
    summary: dict


def _proxy_seed(seed: int, method_tag: int) -> int:
    return int(np.random.SeedSequence([int(seed), method_tag]).generate_state(1, np.uint64)[0])


def _flag_non_converged(table: AccuracyTable, num_labels: int) -> tuple[str, ...]:
    chance = 1.0 / num_labels
    return tuple(
        e.config_id for e in table.entries if e.accuracy <= chance + NON_CONVERGED_MARGIN
    )


def derive_train_importance(
    dataset: SyntheticDataset,
    lower: CapacityClassifier,
    upper: CapacityClassifier,
    constants: ImportanceConstants = DEFAULT_CONSTANTS,
    pca_dim: int | None = None,
    metric: str = "euclidean",
) -> ImportanceTable:
    """Run the importance pipeline: probes to test scores to train scores.

    Features are the upper probe's penultimate activations; the projection
    basis is fit on the test-side features and shared by both splits.
    """
    outcomes = evaluate_probes(lower, upper, dataset)
    test_importance, _ = assign_test_importance(outcomes, constants)
    test_feats = FeatureMatrix(dataset.manifest.test_ids, upper.penultimate(dataset.test_x))
    train_feats = FeatureMatrix(dataset.manifest.train_ids, upper.penultimate(dataset.train_x))
    limit = min(test_feats.dim, len(test_feats.sample_ids))
    target_dim = min(64, limit) if pca_dim is None else min(int(pca_dim), limit)
    pca = fit_pca(test_feats.data, target_dim)
    projected_test = FeatureMatrix(test_feats.sample_ids, pca.transform(test_feats.data))
    projected_train = FeatureMatrix(train_feats.sample_ids, pca.transform(train_feats.data))
    index = build_nn_index(projected_test, metric)
    return transfer_importance(projected_train, index, test_importance)


def run_experiment(
    dataset_spec: SyntheticDatasetSpec,
    search_space: SearchSpace,
    ratios: Sequence[float],
    seeds: Sequence[int],
    constants: ImportanceConstants = DEFAULT_CONSTANTS,
    pca_dim: int | None = None,
    metric: str = "euclidean",
    label_stage: LabelStage | None = None,
) -> ExperimentReport:
    """Compare importance-weighted proxies against uniform-random ones.

    Trains every config on the full data for the reference table, then for
    each ratio, method, and seed builds a proxy, retrains every config on it
    with unchanged hyperparameters, evaluates on the full test set, and
    scores ranking agreement against the reference. The label stage, if any,
    applies only to the importance-weighted method.
    """
    if not ratios or not seeds:
        raise DegenerateInput("need at least one ratio and one seed")
    data = generate_dataset(dataset_spec)
    k = dataset_spec.num_labels

    classifiers = {}
    entries = []
    for config in search_space.configs:
        clf = train_classifier(config, data)
        classifiers[config.config_id] = clf
        acc = classification_accuracy(clf, data.test_x, data.test_y)
        entries.append(ConfigAccuracy(config.config_id, acc, params=config.describe()))
    original = AccuracyTable("100% (original)", tuple(entries))

    lower = classifiers[search_space.lower_id]
    upper = classifiers[search_space.upper_id]
    train_importance = derive_train_importance(
        data, lower, upper, constants=constants, pca_dim=pca_dim, metric=metric
    )
    uniform = ImportanceTable(
        split="train", values={sid: 1.0 for sid in data.manifest.train_ids}
    )

    variants = []
    for ratio in ratios:
        for method_tag, method in enumerate(("ours", "random")):
            for seed in seeds:
                proxy_seed = _proxy_seed(seed, method_tag)
                spec = ProxySpec(
                    target_ratio=float(ratio),
                    seed=proxy_seed,
                    label_stage=label_stage if method == "ours" else None,
                    constants=constants,
                )
                importance = train_importance if method == "ours" else uniform
                selection = generate_proxy(data.manifest, importance, spec)
                proxy_entries = []
                for config in search_space.configs:
                    clf = train_classifier(config, data, selection.kept_train_ids)
                    acc = classification_accuracy(clf, data.test_x, data.test_y)
                    proxy_entries.append(
                        ConfigAccuracy(config.config_id, acc, params=config.describe())
                    )
                table = AccuracyTable(
                    f"{100 * ratio:g}% ({method}) seed {seed}", tuple(proxy_entries)
                )
                variants.append(
                    VariantResult(
                        method=method,
                        ratio=float(ratio),
                        seed=int(seed),
                        proxy_seed=proxy_seed,
                        kept_labels=tuple(sorted(selection.kept_labels)),
                        table=table,
                        report=rank_report(original, table),
                        non_converged=_flag_non_converged(table, k),
                    )
                )

    summary = summarize_variants(variants)
    return ExperimentReport(
        original=original,
        original_non_converged=_flag_non_converged(original, k),
        variants=tuple(variants),
        summary=summary,
    )


def summarize_variants(variants: Sequence[VariantResult]) -> dict:
    """Per-method means of the ranking metrics, plus ours-minus-random margins."""
    summary: dict = {"methods": {}}
    for method in sorted({v.method for v in variants}):
        legs = [v for v in variants if v.method == method]
        summary["methods"][method] = {
            "runs": len(legs),
            "mean_pearson": float(np.mean([v.report.correlation_pearson for v in legs])),
            "mean_spearman": float(np.mean([v.report.correlation_spearman for v in legs])),
            "best_preserved_rate": float(np.mean([v.report.best_preserved for v in legs])),
            "mean_flipped_pairs": float(np.mean([v.report.flipped_pair_count for v in legs])),
        }
    methods = summary["methods"]
    if "ours" in methods and "random" in methods:
        summary["margins"] = {
            "spearman": methods["ours"]["mean_spearman"] - methods["random"]["mean_spearman"],
            "pearson": methods["ours"]["mean_pearson"] - methods["random"]["mean_pearson"],
            "best_preserved_rate": (
                methods["ours"]["best_preserved_rate"] - methods["random"]["best_preserved_rate"]
            ),
        }
    return summary
