"""Assigning importance to test samples from probe outcomes.

Two probes bracket the configuration space: a low-capacity one and a
high-capacity one. Each test sample falls into one of four cases depending on
which probes classified it correctly and which probe has the higher overall
accuracy. Case weights turn into keep probabilities by normalization.
"""

from __future__ import annotations

import warnings

from .datamodel import (
    DEFAULT_CONSTANTS,
    ImportanceConstants,
    ImportanceTable,
    ProbeOutcomeSet,
    SampleCase,
)
from .exceptions import EmptyTestSet, ZeroTotalImportance


def classify_case(
    correct_lower: bool,
    correct_upper: bool,
    upper_strictly_better: bool,
) -> SampleCase:
    """Classify one test sample from its two correctness flags.

    ``upper_strictly_better`` states whether the upper probe's overall
    accuracy strictly exceeds the lower probe's. On disagreement the sample is
    ALIGNED when the better-ranked probe is the correct one, OPPOSED when the
    worse-ranked probe is.
    """
    if correct_lower and correct_upper:
        return SampleCase.BOTH_CORRECT
    if not correct_lower and not correct_upper:
        return SampleCase.BOTH_INCORRECT
    upper_is_the_correct_one = correct_upper
    if upper_is_the_correct_one == upper_strictly_better:
        return SampleCase.ALIGNED
    return SampleCase.OPPOSED


def assign_test_importance(
    outcomes: ProbeOutcomeSet,
    constants: ImportanceConstants = DEFAULT_CONSTANTS,
) -> tuple[ImportanceTable, dict[str, SampleCase]]:
    """Score every test sample by its case weight.

    Returns the (unnormalized) importance table and the per-sample case map.
    Probes beyond the lower/upper pair are ignored with a warning. When the
    two probes tie on accuracy there is no ranking to oppose, so disagreements
    count as ALIGNED; a warning flags the tie because tied probes usually mean
    the capacity gap is too small to be informative.
    """
    if not outcomes.test_ids:
        raise EmptyTestSet("no test samples to assign importance to")
    extra = [p for p in outcomes.probe_ids if p not in (outcomes.lower_id, outcomes.upper_id)]
    if extra:
        warnings.warn(
            f"ignoring {len(extra)} probe(s) beyond the lower/upper pair: {extra}",
            stacklevel=2,
        )
    tied = outcomes.upper_accuracy == outcomes.lower_accuracy
    if tied:
        warnings.warn(
            "lower and upper probes tie on accuracy; disagreements count as aligned",
            stacklevel=2,
        )
    upper_strictly_better = outcomes.upper_accuracy > outcomes.lower_accuracy

    lower_flags = outcomes.correct[outcomes.lower_id]
    upper_flags = outcomes.correct[outcomes.upper_id]
    cases = {}
    values = {}
    for i, sid in enumerate(outcomes.test_ids):
        correct_lower, correct_upper = bool(lower_flags[i]), bool(upper_flags[i])
        if tied and correct_lower != correct_upper:
            case = SampleCase.ALIGNED
        else:
            case = classify_case(correct_lower, correct_upper, upper_strictly_better)
        cases[sid] = case
        values[sid] = constants.for_case(case)
    return ImportanceTable(split="test", values=values), cases


def normalize_keep_prob(table: ImportanceTable) -> ImportanceTable:
    """Attach keep probabilities ``value / sum(values)`` to an importance table.

    The probabilities sum to one and are invariant under rescaling all values
    by a common positive factor.
    """
    total = sum(table.values.values())
    if total <= 0:
        raise ZeroTotalImportance("all importance values are zero")
    keep_prob = {sid: v / total for sid, v in table.values.items()}
    return ImportanceTable(split=table.split, values=dict(table.values), keep_prob=keep_prob)
