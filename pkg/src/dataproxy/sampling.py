"""Turning keep probabilities into a concrete proxy selection.

Sampling is weighted, without replacement, and lands on an exact target count
(the exponential-keys order-statistics scheme). A proxy can additionally drop
whole labels, either after an intermediate sample pass or before any
sampling; keep probabilities are renormalized over the surviving pool before
each sampling stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .datamodel import (
    DEFAULT_CONSTANTS,
    DatasetManifest,
    ImportanceConstants,
    ImportanceTable,
    SampleId,
)
from .exceptions import DegenerateInput, InsufficientSupport
from .importance import normalize_keep_prob

LABEL_STAGE_MODES = ("sample-first", "label-first")


def round_half_up(x: float) -> int:
    """Round to the nearest integer, halves away from zero-point-five up."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class LabelStage:
    """Optional label-reduction stage of a proxy spec.

    ``sample-first`` samples down to ``intermediate_ratio`` first and drops
    labels from the survivors; ``label-first`` drops labels so the pool falls
    to ``intermediate_ratio`` and samples afterwards.
    """

    intermediate_ratio: float
    mode: str = "sample-first"

    def __post_init__(self):
        if not (0 < self.intermediate_ratio <= 1):
            raise DegenerateInput(
                f"intermediate_ratio must be in (0, 1], got {self.intermediate_ratio}"
            )
        if self.mode not in LABEL_STAGE_MODES:
            raise DegenerateInput(f"mode must be one of {LABEL_STAGE_MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class ProxySpec:
    """Everything that determines a proxy besides the dataset itself."""

    target_ratio: float
    seed: int
    label_stage: LabelStage | None = None
    constants: ImportanceConstants = DEFAULT_CONSTANTS

    def __post_init__(self):
        if not (0 < self.target_ratio <= 1):
            raise DegenerateInput(f"target_ratio must be in (0, 1], got {self.target_ratio}")
        if not (0 <= int(self.seed) < 2**64):
            raise DegenerateInput(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.label_stage is not None and self.target_ratio > self.label_stage.intermediate_ratio:
            raise DegenerateInput(
                f"target_ratio {self.target_ratio} exceeds "
                f"intermediate_ratio {self.label_stage.intermediate_ratio}"
            )

    def as_dict(self) -> dict:
        stage = None
        if self.label_stage is not None:
            stage = {
                "intermediate_ratio": self.label_stage.intermediate_ratio,
                "mode": self.label_stage.mode,
            }
        return {
            "target_ratio": self.target_ratio,
            "seed": int(self.seed),
            "label_stage": stage,
            "constants": list(self.constants.as_tuple()),
        }


@dataclass(frozen=True)
class ProxySelection:
    """The chosen training-sample ids and retained labels, with provenance."""

    kept_train_ids: tuple[SampleId, ...]
    kept_labels: frozenset[int]
    provenance: Mapping

    def __post_init__(self):
        object.__setattr__(self, "kept_train_ids", tuple(self.kept_train_ids))
        object.__setattr__(self, "kept_labels", frozenset(self.kept_labels))
        object.__setattr__(self, "provenance", dict(self.provenance))
        if len(set(self.kept_train_ids)) != len(self.kept_train_ids):
            raise DegenerateInput("kept train ids must be unique")
        if not self.kept_labels:
            raise DegenerateInput("at least one label must be kept")


def _weighted_pick(values: Mapping[SampleId, float], target_count: int, rng) -> list[SampleId]:
    """Pick ``target_count`` distinct ids, inclusion tendency ordered by weight.

    Each sample draws the key ``log(uniform) / weight`` and the largest
    ``target_count`` keys win, which realizes sequential weighted sampling
    without replacement. Zero-weight samples get a key of ``-inf`` and can
    never win. Result order follows the input order.
    """
    ids = list(values)
    weights = np.array([values[sid] for sid in ids], dtype=float)
    if target_count < 1:
        raise DegenerateInput(f"target_count must be positive, got {target_count}")
    support = int((weights > 0).sum())
    if target_count > support:
        raise InsufficientSupport(
            f"need {target_count} samples but only {support} have positive keep probability"
        )
    # 1 - random() lies in (0, 1], so the log is finite for positive weights.
    uniforms = 1.0 - rng.random(len(ids))
    keys = np.full(len(ids), -np.inf)
    positive = weights > 0
    keys[positive] = np.log(uniforms[positive]) / weights[positive]
    order = np.lexsort((np.arange(len(ids)), -keys))
    chosen = np.sort(order[:target_count])
    return [ids[i] for i in chosen]


def sample_proxy(
    keep_prob: ImportanceTable,
    target_count: int,
    seed: int | np.random.Generator,
) -> tuple[SampleId, ...]:
    """Sample exactly ``target_count`` ids, weighted by keep probability.

    The table must carry keep probabilities. Output preserves the table's
    id order and is deterministic for a fixed seed.
    """
    if keep_prob.keep_prob is None:
        raise DegenerateInput("importance table has no keep probabilities; normalize first")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return tuple(_weighted_pick(keep_prob.keep_prob, target_count, rng))


def aggregate_label_importance(
    train_importance: ImportanceTable,
    manifest: DatasetManifest,
    how: str = "sum",
) -> dict[int, float]:
    """Aggregate per-sample importance into one value per label.

    The default sum also reflects label population, which is what matters
    when deciding which labels a shrunken proxy can afford to keep; ``mean``
    is available for population-independent scoring. The table may cover a
    subset of the train split (a survivor pool); absent labels score zero.
    """
    if how not in ("sum", "mean"):
        raise DegenerateInput(f"how must be 'sum' or 'mean', got {how!r}")
    unknown = [sid for sid in train_importance.values if sid not in manifest.labels]
    if unknown:
        raise DegenerateInput(f"importance ids not in manifest, e.g. {unknown[:3]}")
    totals = {label: 0.0 for label in range(manifest.num_labels)}
    counts = {label: 0 for label in range(manifest.num_labels)}
    for sid, value in train_importance.values.items():
        label = manifest.labels[sid]
        totals[label] += value
        counts[label] += 1
    if how == "sum":
        return totals
    return {
        label: (totals[label] / counts[label] if counts[label] else 0.0)
        for label in totals
    }


def _greedy_drop(
    label_importance: Mapping[int, float],
    label_sizes: Mapping[int, int],
    keep_while,
) -> frozenset[int]:
    """Drop labels in ascending (importance, id) order while ``keep_while`` allows.

    ``keep_while(pool, next_size)`` decides whether the next drop happens
    given the current pool size. The last label is never dropped.
    """
    order = sorted(label_sizes, key=lambda label: (label_importance[label], label))
    remaining = set(label_sizes)
    pool = sum(label_sizes.values())
    for label in order:
        if len(remaining) == 1 or not keep_while(pool, label_sizes[label]):
            break
        remaining.discard(label)
        pool -= label_sizes[label]
    return frozenset(remaining)


def reduce_labels(
    label_importance: Mapping[int, float],
    manifest: DatasetManifest,
    target_sample_fraction: float,
) -> frozenset[int]:
    """Drop least-important labels until the train pool first falls to the target.

    Labels leave in ascending importance order (ties: smaller id first) until
    the remaining training-sample count is at most ``target_sample_fraction``
    of the original count. The last label always survives.
    """
    if not (0 < target_sample_fraction <= 1):
        raise DegenerateInput(
            f"target_sample_fraction must be in (0, 1], got {target_sample_fraction}"
        )
    missing = [label for label in range(manifest.num_labels) if label not in label_importance]
    if missing:
        raise DegenerateInput(f"label importance missing labels {missing[:5]}")
    sizes = manifest.train_label_sizes()
    threshold = target_sample_fraction * len(manifest.train_ids)
    return _greedy_drop(label_importance, sizes, lambda pool, _: pool > threshold)


def _restrict(table: ImportanceTable, keep: set[SampleId]) -> ImportanceTable:
    values = {sid: v for sid, v in table.values.items() if sid in keep}
    return ImportanceTable(split=table.split, values=values)


def generate_proxy(
    manifest: DatasetManifest,
    train_importance: ImportanceTable,
    spec: ProxySpec,
) -> ProxySelection:
    """Run the full resampling pipeline for one proxy spec.

    Without a label stage this is a single weighted sample down to
    ``round(target_ratio * |train|)``. With ``sample-first`` the pool is
    sampled to the intermediate ratio, label importance is re-aggregated over
    the survivors, and the least important labels are dropped as long as the
    pool stays large enough to cover the final count. With ``label-first``
    labels are dropped up front so the pool falls to the intermediate ratio.
    Either way a final weighted sample lands on the exact target count.
    """
    if train_importance.split != "train":
        raise DegenerateInput("generate_proxy needs a train-split importance table")
    if set(train_importance.values) != set(manifest.train_ids):
        raise DegenerateInput("train importance must cover exactly the manifest train split")
    # Reorder to manifest order so output order and sampling are canonical.
    table = ImportanceTable(
        split="train",
        values={sid: train_importance.values[sid] for sid in manifest.train_ids},
    )

    n = len(manifest.train_ids)
    target_count = round_half_up(spec.target_ratio * n)
    if target_count < 1:
        raise DegenerateInput(
            f"target_ratio {spec.target_ratio} of {n} train samples rounds to zero"
        )
    stage_seeds = np.random.SeedSequence(int(spec.seed)).spawn(2)

    if spec.label_stage is None:
        kept = sample_proxy(
            normalize_keep_prob(table), target_count, np.random.default_rng(stage_seeds[0])
        )
        kept_labels = frozenset(range(manifest.num_labels))
    elif spec.label_stage.mode == "sample-first":
        intermediate_count = round_half_up(spec.label_stage.intermediate_ratio * n)
        survivors = sample_proxy(
            normalize_keep_prob(table),
            intermediate_count,
            np.random.default_rng(stage_seeds[0]),
        )
        survivor_table = _restrict(table, set(survivors))
        label_importance = aggregate_label_importance(survivor_table, manifest)
        sizes = {label: 0 for label in range(manifest.num_labels)}
        for sid in survivors:
            sizes[manifest.labels[sid]] += 1
        # Drop only while the pool keeps room for the final exact sample.
        kept_labels = _greedy_drop(
            label_importance,
            sizes,
            lambda pool, next_size: pool - next_size >= target_count,
        )
        pool = _restrict(
            survivor_table,
            {sid for sid in survivors if manifest.labels[sid] in kept_labels},
        )
        kept = sample_proxy(
            normalize_keep_prob(pool), target_count, np.random.default_rng(stage_seeds[1])
        )
    else:
        label_importance = aggregate_label_importance(table, manifest)
        kept_labels = reduce_labels(
            label_importance, manifest, spec.label_stage.intermediate_ratio
        )
        pool = _restrict(
            table, {sid for sid in manifest.train_ids if manifest.labels[sid] in kept_labels}
        )
        if len(pool.values) < target_count:
            raise InsufficientSupport(
                f"label reduction left {len(pool.values)} samples, need {target_count}"
            )
        kept = sample_proxy(
            normalize_keep_prob(pool), target_count, np.random.default_rng(stage_seeds[1])
        )

    provenance = {
        "spec": spec.as_dict(),
        "manifest_digest": manifest.digest(),
        "train_importance_digest": train_importance.digest(),
    }
    return ProxySelection(
        kept_train_ids=kept, kept_labels=kept_labels, provenance=provenance
    )
