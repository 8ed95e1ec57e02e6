import numpy as np
import pytest

import gmmotda.baselines as baselines
from gmmotda.baselines import otda_empirical, otda_linear
from gmmotda.errors import ValidationError
from oracles import assignment_min_cost


def test_otda_empirical_identity():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(12, 2))
    y = rng.integers(0, 3, size=12)
    result = otda_empirical(X, y, X)
    np.testing.assert_allclose(result.transported_points.features, X, atol=1e-9)
    np.testing.assert_array_equal(result.transported_points.labels, y)
    assert result.strategy == "otda-emd"


def test_otda_empirical_single_source_goes_to_target_mean():
    X_src = np.array([[0.0, 0.0]])
    X_tgt = np.array([[1.0, 0.0], [3.0, 2.0], [2.0, 4.0]])
    result = otda_empirical(X_src, np.array([1]), X_tgt)
    np.testing.assert_allclose(
        result.transported_points.features, X_tgt.mean(axis=0, keepdims=True),
        atol=1e-12,
    )


def test_otda_empirical_matches_permutation_oracle():
    # equal-size uniform problems couple by an optimal permutation, so
    # each source point lands exactly on one target point
    rng = np.random.default_rng(1)
    X_src = rng.normal(size=(5, 2))
    X_tgt = rng.normal(size=(5, 2)) + 3.0
    from gmmotda.solvers import squared_euclidean_cost

    C = squared_euclidean_cost(X_src, X_tgt)
    result = otda_empirical(X_src, np.zeros(5, dtype=int), X_tgt)
    moved = result.transported_points.features
    total = sum(((X_src[i] - moved[i]) ** 2).sum() for i in range(5))
    assert total == pytest.approx(assignment_min_cost(C), abs=1e-9)
    # every image is an actual target point
    for i in range(5):
        assert np.min(((X_tgt - moved[i]) ** 2).sum(axis=1)) < 1e-18


def test_otda_empirical_images_stay_in_target_hull():
    rng = np.random.default_rng(2)
    X_src = rng.normal(size=(8, 2))
    X_tgt = rng.normal(size=(11, 2)) + np.array([5.0, 0.0])
    result = otda_empirical(X_src, np.zeros(8, dtype=int), X_tgt)
    moved = result.transported_points.features
    lo, hi = X_tgt.min(axis=0), X_tgt.max(axis=0)
    assert np.all(moved >= lo - 1e-12)
    assert np.all(moved <= hi + 1e-12)


def test_otda_empirical_sinkhorn_converges():
    rng = np.random.default_rng(3)
    X_src = rng.normal(size=(15, 2))
    X_tgt = rng.normal(size=(10, 2)) + 2.0
    result = otda_empirical(X_src, np.zeros(15, dtype=int), X_tgt, solver="sinkhorn")
    assert result.strategy == "otda-sinkhorn"
    assert result.diagnostics["plan"]["converged"]
    assert result.diagnostics["plan"]["marginal_violation"] < 1e-6


def test_otda_empirical_pair_budget(monkeypatch):
    rng = np.random.default_rng(4)
    X_src = rng.normal(size=(30, 2))
    X_tgt = rng.normal(size=(30, 2))
    y = np.zeros(30, dtype=int)
    monkeypatch.setattr(baselines, "_PAIR_BUDGET", 100)
    with pytest.raises(ValidationError, match="budget"):
        otda_empirical(X_src, y, X_tgt)
    result = otda_empirical(X_src, y, X_tgt, allow_large=True)
    assert result.transported_points.n == 30


def test_otda_empirical_validation():
    X = np.zeros((4, 2))
    y = np.zeros(4, dtype=int)
    with pytest.raises(ValidationError):
        otda_empirical(X, y, np.zeros((4, 3)))
    with pytest.raises(ValidationError):
        otda_empirical(X, np.zeros(3, dtype=int), X)
    with pytest.raises(ValidationError):
        otda_empirical(X, y, X, solver="emd")


def test_otda_linear_identity():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(60, 2))
    y = rng.integers(0, 2, size=60)
    result = otda_linear(X, y, X)
    np.testing.assert_allclose(result.transported_points.features, X, atol=1e-5)
    np.testing.assert_array_equal(result.transported_points.labels, y)
    assert result.strategy == "otda-linear"


def test_otda_linear_recovers_pure_shift():
    rng = np.random.default_rng(6)
    X_src = rng.normal(size=(2000, 2))
    shift = np.array([4.0, -2.0])
    X_tgt = rng.normal(size=(2000, 2)) + shift
    result = otda_linear(X_src, np.zeros(2000, dtype=int), X_tgt)
    amap = np.asarray(result.diagnostics["map"]["A"])
    bvec = np.asarray(result.diagnostics["map"]["b"])
    np.testing.assert_allclose(amap, np.eye(2), atol=0.1)
    np.testing.assert_allclose(bvec, shift, atol=0.2)
    np.testing.assert_allclose(
        result.transported_points.features.mean(axis=0), shift, atol=0.1
    )


def test_otda_linear_contracts_spread():
    # uniform [-2, 2] onto uniform [-1, 1]: the map halves the scale
    rng = np.random.default_rng(7)
    X_src = rng.uniform(-2.0, 2.0, size=(4000, 1))
    X_tgt = rng.uniform(-1.0, 1.0, size=(4000, 1))
    result = otda_linear(X_src, np.zeros(4000, dtype=int), X_tgt)
    A = np.asarray(result.diagnostics["map"]["A"])
    assert A[0, 0] == pytest.approx(0.5, abs=0.05)


def test_otda_linear_validation():
    X = np.zeros((5, 2)) + np.arange(5)[:, None]
    y = np.zeros(5, dtype=int)
    with pytest.raises(ValidationError):
        otda_linear(X, y, np.zeros((5, 3)) + np.arange(5)[:, None])
    with pytest.raises(ValidationError):
        otda_linear(X, np.zeros(2, dtype=int), X)
    with pytest.raises(ValidationError):
        otda_linear(X[:1], y[:1], X)  # too few samples for a Gaussian fit
