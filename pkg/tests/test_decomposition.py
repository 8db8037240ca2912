"""Tests for the principal-component projection.

The implementation goes through the SVD of the centered data; the oracle here
takes the other classical route, an eigendecomposition of the explicit sample
covariance matrix, so the two can only agree if both are right.
"""

import numpy as np
import pytest

from dataproxy import PrincipalComponents, fit_pca, project
from dataproxy.exceptions import DegenerateInput, DimMismatch


def covariance_eigen_oracle(X):
    """Eigenvalues (descending) and eigenvectors of the sample covariance."""
    centered = X - X.mean(axis=0)
    n = X.shape[0]
    cov = np.zeros((X.shape[1], X.shape[1]))
    for row in centered:
        cov += np.outer(row, row)
    cov /= n - 1
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    return eigvals[order], eigvecs[:, order].T


def test_explained_variance_matches_covariance_eigenvalues():
    rng = np.random.default_rng(41)
    for _ in range(50):
        n = int(rng.integers(5, 40))
        d = int(rng.integers(2, 10))
        X = rng.normal(size=(n, d)) @ rng.normal(size=(d, d))
        model = PrincipalComponents().fit(X)
        eigvals, _ = covariance_eigen_oracle(X)
        k = len(model.explained_variance_)
        np.testing.assert_allclose(model.explained_variance_, eigvals[:k], atol=1e-6)


def test_components_match_covariance_eigenvectors_up_to_sign():
    rng = np.random.default_rng(42)
    for _ in range(50):
        n = int(rng.integers(8, 30))
        d = int(rng.integers(2, 8))
        X = rng.normal(size=(n, d)) * rng.uniform(0.5, 4.0, size=d)
        model = PrincipalComponents().fit(X)
        eigvals, eigvecs = covariance_eigen_oracle(X)
        for j, comp in enumerate(model.components_):
            # skip directions inside a near-degenerate eigenspace
            gap = min(
                abs(eigvals[j] - eigvals[j - 1]) if j > 0 else np.inf,
                abs(eigvals[j] - eigvals[j + 1]) if j + 1 < len(eigvals) else np.inf,
            )
            if gap < 1e-4 * max(eigvals[0], 1.0):
                continue
            assert abs(float(comp @ eigvecs[j])) == pytest.approx(1.0, abs=1e-6)


def test_transformed_covariance_is_diagonal_variances():
    rng = np.random.default_rng(43)
    X = rng.normal(size=(60, 7)) @ rng.normal(size=(7, 7))
    model = PrincipalComponents().fit(X)
    Z = model.transform(X)
    cov = np.cov(Z, rowvar=False, ddof=1)
    np.testing.assert_allclose(cov, np.diag(model.explained_variance_), atol=1e-8)


def test_rank_one_line_recovers_direction():
    direction = np.array([1.0, 2.0]) / np.sqrt(5.0)
    t = np.linspace(-3, 3, 15)
    X = np.outer(t, [1.0, 2.0])
    model = PrincipalComponents().fit(X)
    # sign rule: the largest-magnitude coefficient is positive
    np.testing.assert_allclose(model.components_[0], direction, atol=1e-12)
    assert model.explained_variance_[1] == pytest.approx(0.0, abs=1e-12)


def test_full_projection_preserves_pairwise_distances():
    rng = np.random.default_rng(44)
    X = rng.normal(size=(25, 6))
    Z = PrincipalComponents().fit(X).transform(X)
    for i in range(0, 25, 5):
        for j in range(25):
            orig = np.linalg.norm(X[i] - X[j])
            proj = np.linalg.norm(Z[i] - Z[j])
            assert proj == pytest.approx(orig, abs=1e-8)


def test_truncated_projection_variance_sums():
    rng = np.random.default_rng(45)
    X = rng.normal(size=(50, 8)) * np.arange(1, 9)
    model = PrincipalComponents(n_components=3).fit(X)
    Z = model.transform(X)
    per_column = Z.var(axis=0, ddof=1)
    np.testing.assert_allclose(per_column, model.explained_variance_, atol=1e-8)
    assert model.components_.shape == (3, 8)


def test_sign_rule_is_permutation_invariant():
    rng = np.random.default_rng(46)
    X = rng.normal(size=(30, 5)) * [3.0, 1.0, 0.5, 2.0, 0.2]
    a = PrincipalComponents(n_components=2).fit(X)
    b = PrincipalComponents(n_components=2).fit(X[rng.permutation(30)])
    np.testing.assert_allclose(a.components_, b.components_, atol=1e-9)
    for comp in a.components_:
        assert comp[np.argmax(np.abs(comp))] > 0


def test_transform_new_points_uses_training_mean():
    rng = np.random.default_rng(47)
    X = rng.normal(loc=5.0, size=(40, 4))
    model = PrincipalComponents(n_components=2).fit(X)
    q = rng.normal(loc=5.0, size=(3, 4))
    expected = (q - model.mean_) @ model.components_.T
    np.testing.assert_allclose(model.transform(q), expected, atol=1e-12)


def test_wrapper_functions_agree_with_estimator():
    rng = np.random.default_rng(48)
    X = rng.normal(size=(20, 6))
    model = fit_pca(X, n_components=4)
    np.testing.assert_allclose(project(model, X), model.transform(X), atol=0)


def test_invalid_component_counts():
    X = np.eye(4)
    with pytest.raises(DegenerateInput):
        PrincipalComponents(n_components=0).fit(X)
    with pytest.raises(DegenerateInput):
        PrincipalComponents(n_components=5).fit(X)


def test_transform_before_fit_and_dim_mismatch():
    model = PrincipalComponents(n_components=2)
    with pytest.raises(DegenerateInput):
        model.transform(np.eye(3))
    model.fit(np.random.default_rng(0).normal(size=(10, 3)))
    with pytest.raises(DimMismatch):
        model.transform(np.zeros((2, 4)))


def test_non_finite_input_rejected():
    X = np.ones((5, 3))
    X[2, 1] = np.nan
    with pytest.raises(DegenerateInput):
        PrincipalComponents().fit(X)
