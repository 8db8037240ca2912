"""End-to-end tests for build_proxy and the estimator wrapper."""

import numpy as np
import pytest
from sklearn.base import clone

from dataproxy import (
    DataProxyGenerator,
    DatasetManifest,
    FeatureMatrix,
    ImportanceConstants,
    ProbeOutcomeSet,
    ProxySpec,
    build_proxy,
)
from dataproxy.exceptions import DegenerateInput, DimMismatch, MissingOutcome
from dataproxy.sampling import LabelStage


def hand_instance():
    """Eight test samples with known cases; train samples sit exactly on them.

    Train sample x{i} coincides with test sample t{i % 8}, so euclidean
    transfer must copy that test sample's importance verbatim.
    """
    test_ids = tuple(f"t{i}" for i in range(8))
    train_ids = tuple(f"x{i}" for i in range(10))
    labels = {}
    for i, sid in enumerate(train_ids):
        labels[sid] = i % 2
    for i, sid in enumerate(test_ids):
        labels[sid] = i % 2
    manifest = DatasetManifest(
        train_ids=train_ids, test_ids=test_ids, labels=labels, num_labels=2
    )
    rng = np.random.default_rng(1)
    test_x = rng.normal(size=(8, 3)) * 4.0
    train_x = test_x[[i % 8 for i in range(10)]]
    outcomes = ProbeOutcomeSet.from_flags(
        test_ids,
        [1, 1, 1, 0, 0, 0, 0, 0],
        [1, 1, 0, 1, 1, 1, 0, 0],
    )
    return (
        manifest,
        outcomes,
        FeatureMatrix(train_ids, train_x),
        FeatureMatrix(test_ids, test_x),
    )


EXPECTED_TEST_VALUES = {
    "t0": 2.0, "t1": 2.0, "t2": 1.0, "t3": 6.0,
    "t4": 6.0, "t5": 6.0, "t6": 1.0, "t7": 1.0,
}


def test_build_proxy_hand_instance():
    manifest, outcomes, train_feats, test_feats = hand_instance()
    result = build_proxy(manifest, outcomes, train_feats, test_feats, ProxySpec(0.4, 7))

    assert result.test_importance.values == EXPECTED_TEST_VALUES
    assert sum(result.test_importance.keep_prob.values()) == pytest.approx(1.0, abs=1e-9)
    # coinciding points force verbatim importance transfer
    for i, sid in enumerate(manifest.train_ids):
        assert result.train_importance.values[sid] == EXPECTED_TEST_VALUES[f"t{i % 8}"]
    assert sum(result.train_importance.keep_prob.values()) == pytest.approx(1.0, abs=1e-9)

    assert len(result.selection.kept_train_ids) == 4
    assert set(result.selection.kept_train_ids) <= set(manifest.train_ids)
    assert result.case_counts == {
        "both_correct": 2,
        "both_incorrect": 2,
        "aligned": 3,
        "opposed": 1,
    }
    assert sum(result.case_counts.values()) == len(manifest.test_ids)


def test_build_proxy_is_input_order_invariant():
    manifest, outcomes, train_feats, test_feats = hand_instance()
    spec = ProxySpec(0.4, 7)
    base = build_proxy(manifest, outcomes, train_feats, test_feats, spec)

    perm = np.random.default_rng(3).permutation(len(train_feats.sample_ids))
    shuffled = FeatureMatrix(
        tuple(train_feats.sample_ids[i] for i in perm), train_feats.data[perm]
    )
    again = build_proxy(manifest, outcomes, shuffled, test_feats, spec)
    assert again.selection.kept_train_ids == base.selection.kept_train_ids
    assert again.train_importance.values == base.train_importance.values


def test_build_proxy_validation():
    manifest, outcomes, train_feats, test_feats = hand_instance()
    spec = ProxySpec(0.4, 7)

    short = ProbeOutcomeSet.from_flags(
        manifest.test_ids[:-1], [1] * 7, [1, 1, 1, 1, 0, 0, 0]
    )
    with pytest.raises(MissingOutcome, match="t7"):
        build_proxy(manifest, short, train_feats, test_feats, spec)

    extra = ProbeOutcomeSet.from_flags(
        manifest.test_ids + ("ghost",), [1] * 9, [1, 1, 1, 1, 0, 0, 0, 0, 1]
    )
    with pytest.raises(DegenerateInput, match="ghost"):
        build_proxy(manifest, extra, train_feats, test_feats, spec)

    narrow = FeatureMatrix(test_feats.sample_ids, test_feats.data[:, :2])
    with pytest.raises(DimMismatch):
        build_proxy(manifest, outcomes, train_feats, narrow, spec)

    partial = FeatureMatrix(train_feats.sample_ids[:5], train_feats.data[:5])
    with pytest.raises(DegenerateInput, match="cover exactly"):
        build_proxy(manifest, outcomes, partial, test_feats, spec)


def test_build_proxy_pca_dim_is_strict():
    manifest, outcomes, train_feats, test_feats = hand_instance()
    spec = ProxySpec(0.4, 7)
    # explicit dim beyond min(rows, dim) is an error, not a silent clamp
    with pytest.raises(DegenerateInput):
        build_proxy(manifest, outcomes, train_feats, test_feats, spec, pca_dim=9)
    result = build_proxy(manifest, outcomes, train_feats, test_feats, spec, pca_dim=2)
    assert len(result.selection.kept_train_ids) == 4


def test_generator_estimator_contract():
    manifest, outcomes, train_feats, test_feats = hand_instance()
    gen = DataProxyGenerator(target_ratio=0.4, seed=7, pca_dim=2)
    params = gen.get_params()
    assert params["target_ratio"] == 0.4
    assert params["constants"] == (2.0, 1.0, 6.0, 1.0)
    cloned = clone(gen)
    assert cloned.get_params() == params

    gen.fit(manifest, outcomes, train_feats, test_feats)
    assert len(gen.selection_.kept_train_ids) == 4
    assert gen.case_counts_["aligned"] == 3
    assert set(gen.train_importance_.values) == set(manifest.train_ids)

    direct = build_proxy(
        manifest, outcomes, train_feats, test_feats, ProxySpec(0.4, 7), pca_dim=2
    )
    assert gen.selection_.kept_train_ids == direct.selection.kept_train_ids

    gen.set_params(seed=8)
    gen.fit(manifest, outcomes, train_feats, test_feats)
    assert gen.get_params()["seed"] == 8


def test_generator_label_stage_plumbing():
    manifest, outcomes, train_feats, test_feats = hand_instance()
    gen = DataProxyGenerator(
        target_ratio=0.2,
        seed=3,
        label_stage_mode="sample-first",
        intermediate_ratio=0.6,
    )
    gen.fit(manifest, outcomes, train_feats, test_feats)
    stage = gen.selection_.provenance["spec"]["label_stage"]
    assert stage == {"intermediate_ratio": 0.6, "mode": "sample-first"}

    spec = ProxySpec(
        0.2, 3, label_stage=LabelStage(0.6, "sample-first"),
        constants=ImportanceConstants(2.0, 1.0, 6.0, 1.0),
    )
    direct = build_proxy(manifest, outcomes, train_feats, test_feats, spec)
    assert gen.selection_.kept_train_ids == direct.selection.kept_train_ids

    bad = DataProxyGenerator(label_stage_mode="sample-first")
    with pytest.raises(DegenerateInput, match="intermediate_ratio"):
        bad.fit(manifest, outcomes, train_feats, test_feats)
