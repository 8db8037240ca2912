"""Exact nearest-neighbor lookup from training features to test features.

Importance lives on test samples; each training sample inherits the
importance of its closest test sample in the projected feature space. The
scan is exact (no trees, no approximation) so results are reproducible across
platforms, and ties resolve to the smallest reference position.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .datamodel import FeatureMatrix, ImportanceTable, SampleId
from .exceptions import DegenerateInput, EmptyReferenceSet, MissingImportance
from .validation import as_float_matrix, check_dim, check_fitted

METRICS = ("euclidean", "cosine")

# Bound on scratch elements per query chunk; keeps peak memory near 128 MB.
_CHUNK_BUDGET = 2**24


def _unit_rows(X: np.ndarray) -> np.ndarray:
    """Normalize rows to unit length; all-zero rows stay zero.

    A zero vector has no direction, so its cosine similarity to anything is
    defined as zero (distance one).
    """
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    return X / safe


class NearestReferenceIndex(BaseEstimator):
    """Brute-force nearest-neighbor index over a reference feature matrix.

    Parameters
    ----------
    metric : {"euclidean", "cosine"}
        Distances are computed by direct row differences (euclidean) or as
        ``1 - cosine similarity``, chunked over queries to bound memory.
    """

    def __init__(self, metric: str = "euclidean"):
        self.metric = metric

    def fit(self, X, y=None, ids=None):
        if self.metric not in METRICS:
            raise DegenerateInput(f"metric must be one of {METRICS}, got {self.metric!r}")
        X = np.asarray(X, dtype=float)
        if X.ndim == 2 and X.shape[0] == 0:
            raise EmptyReferenceSet("reference set has no rows")
        X = as_float_matrix(X, "reference", min_rows=1, min_cols=1)
        if ids is not None and len(ids) != X.shape[0]:
            raise DegenerateInput(f"{len(ids)} ids for {X.shape[0]} reference rows")
        self.reference_ = X
        self.reference_ids_ = None if ids is None else tuple(ids)
        self.reference_units_ = _unit_rows(X) if self.metric == "cosine" else None
        self.n_features_in_ = X.shape[1]
        return self

    def query(self, Q) -> tuple[np.ndarray, np.ndarray]:
        """Return, per query row, the nearest reference row index and distance."""
        check_fitted(self, "reference_")
        Q = as_float_matrix(Q, "queries", min_rows=1, min_cols=1)
        check_dim(Q, self.n_features_in_, "queries")

        n_ref = self.reference_.shape[0]
        dim = self.reference_.shape[1]
        chunk = max(1, _CHUNK_BUDGET // max(1, n_ref * dim))
        indices = np.empty(Q.shape[0], dtype=np.int64)
        distances = np.empty(Q.shape[0], dtype=float)
        for start in range(0, Q.shape[0], chunk):
            block = Q[start : start + chunk]
            if self.metric == "euclidean":
                diff = block[:, None, :] - self.reference_[None, :, :]
                dist = np.sqrt(np.einsum("qrd,qrd->qr", diff, diff))
            else:
                sim = _unit_rows(block) @ self.reference_units_.T
                dist = 1.0 - sim
            best = np.argmin(dist, axis=1)
            indices[start : start + chunk] = best
            distances[start : start + chunk] = dist[np.arange(block.shape[0]), best]
        return indices, distances


def build_nn_index(test_features: FeatureMatrix, metric: str = "euclidean") -> NearestReferenceIndex:
    """Fit a :class:`NearestReferenceIndex` over a test-side feature matrix."""
    return NearestReferenceIndex(metric=metric).fit(
        test_features.data, ids=test_features.sample_ids
    )


def nearest_test_sample(index: NearestReferenceIndex, query_row) -> tuple[SampleId, float]:
    """Return the id of the reference sample nearest to one query row."""
    check_fitted(index, "reference_")
    if index.reference_ids_ is None:
        raise DegenerateInput("index was built without sample ids")
    row = np.asarray(query_row, dtype=float).reshape(1, -1)
    positions, distances = index.query(row)
    return index.reference_ids_[int(positions[0])], float(distances[0])


def transfer_importance(
    train_features: FeatureMatrix,
    index: NearestReferenceIndex,
    test_importance: ImportanceTable,
) -> ImportanceTable:
    """Give each training sample the importance of its nearest test sample.

    The train features must already live in the same projected space as the
    index. The result has no keep probabilities; normalize separately.
    """
    check_fitted(index, "reference_")
    if index.reference_ids_ is None:
        raise DegenerateInput("index was built without sample ids")
    missing = [sid for sid in index.reference_ids_ if sid not in test_importance.values]
    if missing:
        raise MissingImportance(
            f"{len(missing)} reference id(s) lack test importance, e.g. {missing[:3]}"
        )
    positions, _ = index.query(train_features.data)
    values = {
        train_id: test_importance.values[index.reference_ids_[int(pos)]]
        for train_id, pos in zip(train_features.sample_ids, positions)
    }
    return ImportanceTable(split="train", values=values)
