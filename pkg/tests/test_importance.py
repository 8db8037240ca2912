"""Tests for probe-outcome classification and importance assignment."""

import warnings

import numpy as np
import pytest

from dataproxy import (
    DEFAULT_CONSTANTS,
    EmptyTestSet,
    ImportanceConstants,
    ImportanceTable,
    ProbeOutcomeSet,
    SampleCase,
    ZeroTotalImportance,
    assign_test_importance,
    classify_case,
    normalize_keep_prob,
)
from dataproxy.exceptions import DegenerateInput

# Independent restatement of the case rule, written as a lookup table so the
# test cannot share a bug with the branching in classify_case.
TRUTH_TABLE = {
    (False, False, False): SampleCase.BOTH_INCORRECT,
    (False, False, True): SampleCase.BOTH_INCORRECT,
    (True, True, False): SampleCase.BOTH_CORRECT,
    (True, True, True): SampleCase.BOTH_CORRECT,
    (False, True, True): SampleCase.ALIGNED,
    (True, False, False): SampleCase.ALIGNED,
    (False, True, False): SampleCase.OPPOSED,
    (True, False, True): SampleCase.OPPOSED,
}


def oracle_cases(lower_flags, upper_flags):
    """Re-derive the expected case per sample straight from the flags."""
    acc_lower = float(np.mean(lower_flags)) if len(lower_flags) else 0.0
    acc_upper = float(np.mean(upper_flags)) if len(upper_flags) else 0.0
    usb = acc_upper > acc_lower
    tied = acc_upper == acc_lower
    out = []
    for cl, cu in zip(lower_flags, upper_flags):
        cl, cu = bool(cl), bool(cu)
        if tied and cl != cu:
            out.append(SampleCase.ALIGNED)
        else:
            out.append(TRUTH_TABLE[(cl, cu, usb)])
    return out


def test_classify_case_truth_table():
    for (cl, cu, usb), expected in TRUTH_TABLE.items():
        assert classify_case(cl, cu, usb) is expected


def test_default_constants():
    assert DEFAULT_CONSTANTS.as_tuple() == (2.0, 1.0, 6.0, 1.0)


def test_assignment_matches_reclassification_oracle():
    rng = np.random.default_rng(2024)
    for trial in range(50):
        n = int(rng.integers(1, 40))
        lower = rng.random(n) < rng.uniform(0.2, 0.9)
        upper = rng.random(n) < rng.uniform(0.2, 0.9)
        ids = [f"t{i}" for i in range(n)]
        outcomes = ProbeOutcomeSet.from_flags(ids, lower, upper)
        with warnings.catch_warnings():
            # ties happen by chance in the fuzz loop; the warning is its own test
            warnings.simplefilter("ignore")
            table, cases = assign_test_importance(outcomes)
        expected = oracle_cases(lower, upper)
        assert [cases[sid] for sid in ids] == expected
        assert [table.values[sid] for sid in ids] == [
            DEFAULT_CONSTANTS.for_case(c) for c in expected
        ]


def test_values_drawn_from_constants():
    rng = np.random.default_rng(7)
    constants = ImportanceConstants(2.5, 0.5, 9.0, 0.25)
    lower = rng.random(200) < 0.5
    upper = rng.random(200) < 0.8
    outcomes = ProbeOutcomeSet.from_flags([f"t{i}" for i in range(200)], lower, upper)
    table, _ = assign_test_importance(outcomes, constants)
    assert set(table.values.values()) <= set(constants.as_tuple())


def test_keep_prob_sums_to_one_and_is_scale_invariant():
    rng = np.random.default_rng(11)
    for _ in range(20):
        n = int(rng.integers(2, 60))
        values = {f"s{i}": float(v) for i, v in enumerate(rng.uniform(0.01, 5.0, n))}
        table = ImportanceTable(split="test", values=values)
        normed = normalize_keep_prob(table)
        assert abs(sum(normed.keep_prob.values()) - 1.0) < 1e-9
        scaled = normalize_keep_prob(
            ImportanceTable(split="test", values={k: 3.7 * v for k, v in values.items()})
        )
        for sid in values:
            assert scaled.keep_prob[sid] == pytest.approx(normed.keep_prob[sid], abs=1e-12)


def test_keep_prob_monotone_in_value():
    table = ImportanceTable(split="test", values={"a": 1.0, "b": 6.0, "c": 2.0})
    normed = normalize_keep_prob(table)
    assert normed.keep_prob["b"] > normed.keep_prob["c"] > normed.keep_prob["a"]
    assert normed.keep_prob["b"] == pytest.approx(6.0 / 9.0)


def test_tied_probes_warn_and_align_disagreements():
    # Both probes 2/3 correct overall, but they disagree on two samples.
    lower = [True, True, False]
    upper = [True, False, True]
    outcomes = ProbeOutcomeSet.from_flags(["a", "b", "c"], lower, upper)
    with pytest.warns(UserWarning, match="tie"):
        _, cases = assign_test_importance(outcomes)
    assert cases == {
        "a": SampleCase.BOTH_CORRECT,
        "b": SampleCase.ALIGNED,
        "c": SampleCase.ALIGNED,
    }


def test_extra_probe_is_ignored_with_warning():
    ids = ["a", "b", "c", "d"]
    lower = np.array([True, False, False, True])
    upper = np.array([True, True, False, True])
    aux = np.array([False, False, False, False])
    outcomes = ProbeOutcomeSet(
        probe_ids=("lower", "upper", "mid"),
        lower_id="lower",
        upper_id="upper",
        test_ids=ids,
        accuracy={"lower": 0.5, "upper": 0.75, "mid": 0.0},
        correct={"lower": lower, "upper": upper, "mid": aux},
    )
    with pytest.warns(UserWarning, match="ignoring"):
        table, cases = assign_test_importance(outcomes)
    plain = ProbeOutcomeSet.from_flags(ids, lower, upper)
    expected_table, expected_cases = assign_test_importance(plain)
    assert cases == expected_cases
    assert table.values == expected_table.values


def test_empty_test_set_raises():
    outcomes = ProbeOutcomeSet.from_flags([], [], [])
    with pytest.raises(EmptyTestSet):
        assign_test_importance(outcomes)


def test_zero_total_importance_raises():
    table = ImportanceTable(split="test", values={"a": 0.0, "b": 0.0})
    with pytest.raises(ZeroTotalImportance):
        normalize_keep_prob(table)


def test_all_zero_constants_rejected():
    with pytest.raises(DegenerateInput):
        ImportanceConstants(0, 0, 0, 0)
    with pytest.raises(DegenerateInput):
        ImportanceConstants(-1, 1, 1, 1)
