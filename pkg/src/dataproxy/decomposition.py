"""Principal-component projection of probe feature vectors.

Raw penultimate-layer activations are high dimensional and noisy; nearest
neighbor lookups run on a compact orthogonal basis instead. The decomposition
is deterministic: a fixed sign convention removes the per-component sign
ambiguity of the underlying SVD.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import DegenerateInput
from .validation import as_float_matrix, check_dim, check_fitted


def _fix_component_signs(components: np.ndarray) -> np.ndarray:
    """Flip each component so its largest-magnitude coefficient is positive.

    Ties on magnitude resolve to the earliest index, so the convention is a
    pure function of the component values.
    """
    flipped = components.copy()
    for row in flipped:
        pivot = int(np.argmax(np.abs(row)))
        if row[pivot] < 0:
            row *= -1.0
    return flipped


class PrincipalComponents(TransformerMixin, BaseEstimator):
    """PCA via thin SVD of the centered data matrix.

    Parameters
    ----------
    n_components : int or None
        Number of components to keep. ``None`` keeps ``min(n_samples,
        n_features)``. Must not exceed that bound when given.

    Attributes
    ----------
    mean_ : ndarray of shape (n_features,)
    components_ : ndarray of shape (n_components, n_features)
        Rows are orthonormal, ordered by decreasing explained variance, and
        sign-fixed (largest-magnitude coefficient positive).
    explained_variance_ : ndarray of shape (n_components,)
        Singular values squared over ``n_samples - 1``.
    """

    def __init__(self, n_components: int | None = None):
        self.n_components = n_components

    def fit(self, X, y=None):
        X = as_float_matrix(X, "X", min_rows=2, min_cols=1)
        n_samples, n_features = X.shape
        limit = min(n_samples, n_features)
        k = limit if self.n_components is None else int(self.n_components)
        if not (1 <= k <= limit):
            raise DegenerateInput(
                f"n_components must be in [1, {limit}] for shape {X.shape}, got {k}"
            )
        self.mean_ = X.mean(axis=0)
        _, s, vt = np.linalg.svd(X - self.mean_, full_matrices=False)
        self.components_ = _fix_component_signs(vt[:k])
        self.explained_variance_ = (s[:k] ** 2) / (n_samples - 1)
        self.n_features_in_ = n_features
        return self

    def transform(self, X) -> np.ndarray:
        check_fitted(self, "components_")
        X = as_float_matrix(X, "X", min_rows=1, min_cols=1)
        check_dim(X, self.n_features_in_, "X")
        return (X - self.mean_) @ self.components_.T


def fit_pca(features: np.ndarray, n_components: int | None = None) -> PrincipalComponents:
    """Fit a :class:`PrincipalComponents` model on a feature matrix."""
    return PrincipalComponents(n_components=n_components).fit(features)


def project(model: PrincipalComponents, features: np.ndarray) -> np.ndarray:
    """Project a feature matrix into a fitted model's component space."""
    return model.transform(features)
