"""Core domain model: dataset manifests, probe outcomes, and importance tables.

All types are immutable after construction and validated eagerly, so any
instance that exists is internally consistent and safe to share between
threads.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

import numpy as np

from .exceptions import DegenerateInput, FormatError

#: Sample identifiers are opaque strings, unique within their split.
SampleId = str

_ACCURACY_TOL = 1e-9


class SampleCase(Enum):
    """How a test sample's probe outcomes relate to the probes' accuracy ranking.

    ``BOTH_CORRECT`` and ``BOTH_INCORRECT`` carry no ranking information.
    ``ALIGNED`` means the probes disagree and the higher-accuracy probe is the
    one that classified the sample correctly; such samples witness the ranking
    and get the largest default weight. ``OPPOSED`` means the lower-accuracy
    probe is the one that got it right, working against the ranking.
    """

    BOTH_CORRECT = "both_correct"
    BOTH_INCORRECT = "both_incorrect"
    ALIGNED = "aligned"
    OPPOSED = "opposed"


@dataclass(frozen=True)
class ImportanceConstants:
    """Per-case importance weights used when scoring test samples.

    All weights must be non-negative and at least one must be positive.
    The defaults weight ranking-aligned disagreements six times higher than
    ranking-opposed ones.
    """

    both_correct: float = 2.0
    both_incorrect: float = 1.0
    aligned: float = 6.0
    opposed: float = 1.0

    def __post_init__(self):
        values = self.as_tuple()
        if any(v < 0 for v in values):
            raise DegenerateInput(f"importance constants must be >= 0, got {values}")
        if all(v == 0 for v in values):
            raise DegenerateInput("at least one importance constant must be positive")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.both_correct, self.both_incorrect, self.aligned, self.opposed)

    def for_case(self, case: SampleCase) -> float:
        return {
            SampleCase.BOTH_CORRECT: self.both_correct,
            SampleCase.BOTH_INCORRECT: self.both_incorrect,
            SampleCase.ALIGNED: self.aligned,
            SampleCase.OPPOSED: self.opposed,
        }[case]


DEFAULT_CONSTANTS = ImportanceConstants()


def _check_unique(ids, what: str) -> None:
    if len(set(ids)) != len(ids):
        raise DegenerateInput(f"duplicate sample ids in {what}")
    if any(not i for i in ids):
        raise DegenerateInput(f"empty sample id in {what}")


@dataclass(frozen=True)
class DatasetManifest:
    """Names every sample, its split, and its label.

    ``labels`` covers both splits; label ids are dense integers in
    ``[0, num_labels)`` and every label has at least one training sample.
    """

    train_ids: tuple[SampleId, ...]
    test_ids: tuple[SampleId, ...]
    labels: Mapping[SampleId, int]
    num_labels: int

    def __post_init__(self):
        object.__setattr__(self, "train_ids", tuple(self.train_ids))
        object.__setattr__(self, "test_ids", tuple(self.test_ids))
        object.__setattr__(self, "labels", dict(self.labels))
        _check_unique(self.train_ids, "train split")
        _check_unique(self.test_ids, "test split")
        overlap = set(self.train_ids) & set(self.test_ids)
        if overlap:
            raise DegenerateInput(f"ids in both splits: {sorted(overlap)[:5]}")
        all_ids = set(self.train_ids) | set(self.test_ids)
        if set(self.labels) != all_ids:
            missing = sorted(all_ids - set(self.labels))[:5]
            extra = sorted(set(self.labels) - all_ids)[:5]
            raise DegenerateInput(
                f"labels must cover exactly the manifest ids (missing={missing}, extra={extra})"
            )
        for sid, label in self.labels.items():
            if not (0 <= label < self.num_labels):
                raise DegenerateInput(
                    f"label {label} of sample {sid!r} outside [0, {self.num_labels})"
                )
        seen = {self.labels[sid] for sid in self.train_ids}
        if seen != set(range(self.num_labels)):
            empty = sorted(set(range(self.num_labels)) - seen)
            raise DegenerateInput(f"labels without training samples: {empty}")

    def label_of(self, sample_id: SampleId) -> int:
        return self.labels[sample_id]

    def train_label_sizes(self) -> dict[int, int]:
        sizes = {label: 0 for label in range(self.num_labels)}
        for sid in self.train_ids:
            sizes[self.labels[sid]] += 1
        return sizes

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(f"manifest/{self.num_labels}\n".encode())
        for split, ids in (("train", self.train_ids), ("test", self.test_ids)):
            for sid in ids:
                h.update(f"{split}\t{sid}\t{self.labels[sid]}\n".encode())
        return h.hexdigest()


@dataclass(frozen=True)
class ProbeOutcomeSet:
    """Per-test-sample correctness flags for each probe, plus overall accuracies.

    ``correct[pid]`` is a boolean array aligned with ``test_ids``. Exactly one
    probe carries the ``lower`` role and one the ``upper`` role; further probes
    may be present but are ignored by importance assignment.
    """

    probe_ids: tuple[str, ...]
    lower_id: str
    upper_id: str
    test_ids: tuple[SampleId, ...]
    accuracy: Mapping[str, float]
    correct: Mapping[str, np.ndarray]

    def __post_init__(self):
        object.__setattr__(self, "probe_ids", tuple(self.probe_ids))
        object.__setattr__(self, "test_ids", tuple(self.test_ids))
        object.__setattr__(self, "accuracy", dict(self.accuracy))
        flags = {}
        for pid, arr in dict(self.correct).items():
            arr = np.asarray(arr, dtype=bool)
            arr.setflags(write=False)
            flags[pid] = arr
        object.__setattr__(self, "correct", flags)

        if len(self.probe_ids) < 2:
            raise DegenerateInput("need at least two probes")
        _check_unique(self.probe_ids, "probe ids")
        _check_unique(self.test_ids, "outcome test ids")
        if self.lower_id == self.upper_id:
            raise DegenerateInput("lower and upper probes must be distinct")
        for role, pid in (("lower", self.lower_id), ("upper", self.upper_id)):
            if pid not in self.probe_ids:
                raise DegenerateInput(f"{role} probe {pid!r} not among probe ids")
        if set(self.correct) != set(self.probe_ids) or set(self.accuracy) != set(self.probe_ids):
            raise DegenerateInput("correctness flags and accuracies must cover every probe")
        n = len(self.test_ids)
        for pid in self.probe_ids:
            if self.correct[pid].shape != (n,):
                raise DegenerateInput(
                    f"probe {pid!r} has {self.correct[pid].shape} flags for {n} test samples"
                )
            recomputed = float(self.correct[pid].mean()) if n else 0.0
            if abs(recomputed - self.accuracy[pid]) > _ACCURACY_TOL:
                raise FormatError(
                    f"probe {pid!r} accuracy {self.accuracy[pid]} != mean of flags {recomputed}"
                )

    @classmethod
    def from_flags(
        cls,
        test_ids,
        lower_flags,
        upper_flags,
        lower_id: str = "lower",
        upper_id: str = "upper",
    ) -> "ProbeOutcomeSet":
        """Build a two-probe outcome set, deriving accuracies from the flags."""
        lower_flags = np.asarray(lower_flags, dtype=bool)
        upper_flags = np.asarray(upper_flags, dtype=bool)
        return cls(
            probe_ids=(lower_id, upper_id),
            lower_id=lower_id,
            upper_id=upper_id,
            test_ids=tuple(test_ids),
            accuracy={
                lower_id: float(lower_flags.mean()) if lower_flags.size else 0.0,
                upper_id: float(upper_flags.mean()) if upper_flags.size else 0.0,
            },
            correct={lower_id: lower_flags, upper_id: upper_flags},
        )

    @property
    def lower_accuracy(self) -> float:
        return self.accuracy[self.lower_id]

    @property
    def upper_accuracy(self) -> float:
        return self.accuracy[self.upper_id]

    def digest(self) -> str:
        h = hashlib.sha256()
        for pid in self.probe_ids:
            role = {self.lower_id: "lower", self.upper_id: "upper"}.get(pid, "aux")
            h.update(f"probe\t{pid}\t{role}\t{self.accuracy[pid]!r}\n".encode())
        for i, sid in enumerate(self.test_ids):
            bits = "".join(str(int(self.correct[pid][i])) for pid in self.probe_ids)
            h.update(f"{sid}\t{bits}\n".encode())
        return h.hexdigest()


@dataclass(frozen=True)
class FeatureMatrix:
    """Sample-aligned dense feature vectors, one row per sample id."""

    sample_ids: tuple[SampleId, ...]
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sample_ids", tuple(self.sample_ids))
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[1] < 1:
            raise DegenerateInput(f"feature data must be 2-D with >= 1 column, got {data.shape}")
        if data.shape[0] != len(self.sample_ids):
            raise DegenerateInput(
                f"{len(self.sample_ids)} sample ids but {data.shape[0]} feature rows"
            )
        if not np.isfinite(data).all():
            raise DegenerateInput("feature data contains non-finite values")
        _check_unique(self.sample_ids, "feature matrix")
        data = data.copy()
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def dim(self) -> int:
        return int(self.data.shape[1])

    def row_of(self, sample_id: SampleId) -> np.ndarray:
        return self.data[self.sample_ids.index(sample_id)]

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(f"features/{self.dim}\n".encode())
        for sid in self.sample_ids:
            h.update(f"{sid}\n".encode())
        h.update(np.ascontiguousarray(self.data, dtype="<f8").tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class ImportanceTable:
    """Per-sample importance values for one split, optionally normalized.

    ``values`` preserves split order. When ``keep_prob`` is present it holds
    ``value / sum(values)`` for every sample and sums to one.
    """

    split: str
    values: Mapping[SampleId, float]
    keep_prob: Mapping[SampleId, float] | None = None

    def __post_init__(self):
        if self.split not in ("train", "test"):
            raise DegenerateInput(f"split must be 'train' or 'test', got {self.split!r}")
        object.__setattr__(self, "values", dict(self.values))
        if not self.values:
            raise DegenerateInput("importance table must not be empty")
        for sid, v in self.values.items():
            if not np.isfinite(v) or v < 0:
                raise DegenerateInput(f"importance of {sid!r} must be finite and >= 0, got {v}")
        if self.keep_prob is not None:
            kp = dict(self.keep_prob)
            object.__setattr__(self, "keep_prob", kp)
            if list(kp) != list(self.values):
                raise DegenerateInput("keep_prob must be keyed like values, in the same order")
            total = sum(self.values.values())
            for sid, p in kp.items():
                if abs(p - self.values[sid] / total) > 1e-12:
                    raise DegenerateInput(f"keep_prob of {sid!r} is not value/total")
            if abs(sum(kp.values()) - 1.0) > _ACCURACY_TOL:
                raise DegenerateInput("keep probabilities must sum to 1")

    def sample_ids(self) -> tuple[SampleId, ...]:
        return tuple(self.values)

    def values_array(self) -> np.ndarray:
        return np.array(list(self.values.values()), dtype=float)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(f"importance/{self.split}\n".encode())
        for sid, v in self.values.items():
            kp = "" if self.keep_prob is None else repr(self.keep_prob[sid])
            h.update(f"{sid}\t{v!r}\t{kp}\n".encode())
        return h.hexdigest()


# Roles recognized in outcome files; anything beyond lower/upper is carried
# along but never consulted.
PROBE_ROLES = ("lower", "upper", "aux")
