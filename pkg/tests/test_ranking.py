"""Tests for pairwise ranking agreement and correlation scoring.

scipy.stats supplies the correlation oracles; the flipped-pair count is
checked against a brute-force scan over config pairs.
"""

import numpy as np
import pytest
import scipy.stats

from dataproxy import (
    AccuracyTable,
    ConfigAccuracy,
    agreement_matrix,
    agreement_grid_text,
    best_config_preserved,
    correlation_score,
    flipped_pair_count,
    rank_report,
    render_agreement_figure,
)
from dataproxy.exceptions import ConfigMismatch, DegenerateInput, ZeroVariance
from dataproxy.io import read_accuracy_table
from dataproxy.ranking import FLIPPED, PRESERVED, TIED, average_ranks


def table(name, accuracies):
    return AccuracyTable(
        variant_name=name,
        entries=tuple(
            ConfigAccuracy(config_id=str(i + 1), accuracy=float(a))
            for i, a in enumerate(accuracies)
        ),
    )


def random_accuracies(rng, n, tie_prob=0.0):
    acc = rng.uniform(0.1, 0.95, n)
    if tie_prob and n > 2:
        for i in range(1, n):
            if rng.random() < tie_prob:
                acc[i] = acc[rng.integers(0, i)]
    return acc


def test_pearson_matches_scipy():
    rng = np.random.default_rng(21)
    for _ in range(50):
        n = int(rng.integers(3, 15))
        ref = table("ref", random_accuracies(rng, n))
        cand = table("cand", random_accuracies(rng, n))
        got = correlation_score(ref, cand, "pearson")
        want = scipy.stats.pearsonr(ref.accuracies(), cand.accuracies()).statistic
        assert got == pytest.approx(want, abs=1e-12)


def test_spearman_matches_scipy_including_ties():
    rng = np.random.default_rng(22)
    for _ in range(50):
        n = int(rng.integers(3, 15))
        ref = table("ref", random_accuracies(rng, n, tie_prob=0.3))
        cand = table("cand", random_accuracies(rng, n, tie_prob=0.3))
        if np.unique(ref.accuracies()).size < 2 or np.unique(cand.accuracies()).size < 2:
            continue
        got = correlation_score(ref, cand, "spearman")
        want = scipy.stats.spearmanr(ref.accuracies(), cand.accuracies()).statistic
        assert got == pytest.approx(want, abs=1e-12)


def test_average_ranks_match_scipy():
    rng = np.random.default_rng(23)
    for _ in range(20):
        x = rng.choice([0.1, 0.2, 0.3, 0.4], size=10)
        np.testing.assert_allclose(average_ranks(x), scipy.stats.rankdata(x), atol=0)


def test_flipped_count_matches_brute_force():
    rng = np.random.default_rng(24)
    for _ in range(50):
        n = int(rng.integers(3, 12))
        ref = table("ref", random_accuracies(rng, n, tie_prob=0.2))
        cand = table("cand", random_accuracies(rng, n, tie_prob=0.2))
        matrix = agreement_matrix(ref, cand)
        r, c = ref.accuracies(), cand.accuracies()
        want = sum(
            1
            for i in range(n)
            for j in range(i + 1, n)
            if (r[i] - r[j]) * (c[i] - c[j]) < 0
        )
        assert flipped_pair_count(matrix) == want


def test_agreement_matrix_hand_example():
    ref = table("ref", [0.1, 0.2, 0.3])
    cand = table("cand", [0.2, 0.1, 0.3])
    matrix = agreement_matrix(ref, cand)
    assert matrix[0, 1] == matrix[1, 0] == FLIPPED
    assert matrix[0, 2] == matrix[2, 0] == PRESERVED
    assert matrix[1, 2] == matrix[2, 1] == PRESERVED
    assert (np.diag(matrix) == PRESERVED).all()
    assert flipped_pair_count(matrix) == 1


def test_ties_in_either_table_mark_cells_tied():
    ref = table("ref", [0.5, 0.5, 0.7])
    cand = table("cand", [0.1, 0.2, 0.3])
    matrix = agreement_matrix(ref, cand)
    assert matrix[0, 1] == TIED
    cand_tied = table("cand", [0.4, 0.4, 0.9])
    matrix = agreement_matrix(table("ref", [0.1, 0.2, 0.3]), cand_tied)
    assert matrix[0, 1] == TIED
    assert matrix[0, 2] == PRESERVED


def test_agreement_is_symmetric_in_table_order():
    rng = np.random.default_rng(25)
    ref = table("a", random_accuracies(rng, 8))
    cand = table("b", random_accuracies(rng, 8))
    np.testing.assert_array_equal(
        agreement_matrix(ref, cand), agreement_matrix(cand, ref)
    )


def test_identical_tables_score_perfectly():
    acc = [0.3, 0.5, 0.9, 0.7]
    report = rank_report(table("ref", acc), table("same", acc))
    assert (report.agreement == PRESERVED).all()
    assert report.correlation_pearson == pytest.approx(1.0)
    assert report.correlation_spearman == pytest.approx(1.0)
    assert report.best_preserved
    assert report.flipped_pair_count == 0
    assert report.reference_best_id == report.candidate_best_id == "3"


def test_monotone_transform_keeps_spearman_at_one():
    acc = np.array([0.2, 0.35, 0.5, 0.8, 0.65])
    squashed = table("cand", acc**2)
    ref = table("ref", acc)
    assert correlation_score(ref, squashed, "spearman") == pytest.approx(1.0)
    assert 0 < correlation_score(ref, squashed, "pearson") < 1
    affine = table("cand", 0.5 * acc + 0.1)
    assert correlation_score(ref, affine, "pearson") == pytest.approx(1.0, abs=1e-12)
    assert flipped_pair_count(agreement_matrix(ref, squashed)) == 0


def test_best_config_preserved_cases():
    ref = table("ref", [0.1, 0.9, 0.5])
    same = table("cand", [0.3, 0.8, 0.6])
    preserved, ref_best, cand_best = best_config_preserved(ref, same)
    assert preserved and ref_best == cand_best == "2"
    moved = table("cand", [0.3, 0.5, 0.8])
    preserved, ref_best, cand_best = best_config_preserved(ref, moved)
    assert not preserved
    assert (ref_best, cand_best) == ("2", "3")


def test_tied_best_warns_and_fails():
    ref = table("ref", [0.9, 0.9, 0.5])
    cand = table("cand", [0.9, 0.8, 0.5])
    with pytest.warns(UserWarning, match="tied best"):
        preserved, _, _ = best_config_preserved(ref, cand)
    assert not preserved
    with pytest.warns(UserWarning, match="tied best"):
        preserved, _, _ = best_config_preserved(cand, ref)
    assert not preserved


def test_zero_variance_raises():
    ref = table("ref", [0.5, 0.5, 0.5])
    cand = table("cand", [0.1, 0.2, 0.3])
    with pytest.raises(ZeroVariance):
        correlation_score(ref, cand, "pearson")
    with pytest.raises(ZeroVariance):
        correlation_score(cand, ref, "spearman")


def test_config_mismatch_names_both_sides():
    ref = AccuracyTable("ref", (ConfigAccuracy("a", 0.1), ConfigAccuracy("b", 0.2)))
    cand = AccuracyTable("cand", (ConfigAccuracy("a", 0.1), ConfigAccuracy("c", 0.2)))
    with pytest.raises(ConfigMismatch, match=r"only-reference=\['b'\].*only-candidate=\['c'\]"):
        agreement_matrix(ref, cand)


def test_too_few_configs():
    ref = AccuracyTable("ref", (ConfigAccuracy("a", 0.1),))
    with pytest.raises(DegenerateInput):
        correlation_score(ref, ref)
    # best-config check works from a single entry
    assert best_config_preserved(ref, ref)[0]


def test_invalid_method_and_accuracy_range():
    ref = table("ref", [0.1, 0.2])
    with pytest.raises(DegenerateInput):
        correlation_score(ref, ref, "kendall")
    with pytest.raises(DegenerateInput):
        ConfigAccuracy("a", 1.2)
    with pytest.raises(DegenerateInput):
        ConfigAccuracy("a", -0.1)


def test_grid_text_layout():
    ref = table("ref", [0.1, 0.2, 0.3])
    cand = table("cand", [0.2, 0.1, 0.3])
    text = agreement_grid_text(agreement_matrix(ref, cand), ref.config_ids())
    lines = text.splitlines()
    assert lines[0] == "# dpx-agreement v1"
    assert lines[1] == "configs:\t1\t2\t3"
    assert lines[2] == "1\t.x."
    assert lines[3] == "2\tx.."
    assert lines[4] == "3\t..."


def test_render_figure_counts_and_file(tmp_path):
    ref = table("ref", [0.1, 0.2, 0.3, 0.4])
    cand = table("cand", [0.2, 0.1, 0.3, 0.4])
    matrix = agreement_matrix(ref, cand)
    out = tmp_path / "grid.svg"
    result = render_agreement_figure(matrix, ref.config_ids(), "4", str(out))
    assert out.exists() and out.stat().st_size > 0
    assert result["counts"]["flipped"] == 2  # both cells of the one flipped pair
    assert result["counts"]["preserved"] + result["counts"]["tied"] + result["counts"]["flipped"] == 16
    assert result["path"] == str(out)


def test_fixture_regression_resnet_family():
    # pinned expectations computed from the tables shipped in fixtures/
    orig = read_accuracy_table("fixtures/resnet20_cifar10/original.csv")
    rand5 = read_accuracy_table("fixtures/resnet20_cifar10/random_5pct.csv")
    ours5 = read_accuracy_table("fixtures/resnet20_cifar10/ours_5pct.csv")
    report = rank_report(orig, rand5)
    assert report.correlation_pearson == pytest.approx(0.9266, abs=5e-5)
    assert not report.best_preserved
    assert (report.reference_best_id, report.candidate_best_id) == ("10", "12")
    assert report.flipped_pair_count == 8
    ids = report.config_ids
    assert report.agreement[ids.index("10"), ids.index("12")] == FLIPPED

    report = rank_report(orig, ours5)
    assert report.correlation_pearson == pytest.approx(0.9674, abs=5e-5)
    assert report.best_preserved
    assert report.flipped_pair_count == 4
