"""Diagonal-covariance Gaussian mixtures: EM fitting, sampling, labeling.

Source-domain mixtures additionally carry a per-component class
distribution ``label_dist`` (row k = P(Y | component k)), estimated from
labeled data by responsibility-weighted class counts.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp

from .data import Dataset
from .errors import ValidationError
from .gaussians import DiagGaussian

# Relative variance floor, in units of per-dimension data variance; the
# absolute term guards all-identical inputs.
VAR_FLOOR_REL = 1e-6
VAR_FLOOR_ABS = 1e-12

_LLOYD_MAX_ITER = 25
_DEAD_COMPONENT_MASS = 1e-12


@dataclass(frozen=True)
class Gmm:
    """Mixture of diagonal Gaussians with optional component labels."""

    weights: np.ndarray      # (K,)
    means: np.ndarray        # (K, d)
    vars: np.ndarray         # (K, d)
    label_dist: np.ndarray | None = None   # (K, n_classes), row-stochastic

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        means = np.asarray(self.means, dtype=np.float64)
        vars_ = np.asarray(self.vars, dtype=np.float64)
        if weights.ndim != 1 or weights.shape[0] < 1:
            raise ValidationError("weights must be a non-empty vector")
        K = weights.shape[0]
        if means.ndim != 2 or means.shape[0] != K or vars_.shape != means.shape:
            raise ValidationError("means and vars must be (K, d)")
        if np.any(weights < 0):
            raise ValidationError("weights must be nonnegative")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValidationError(f"weights must sum to 1, got {weights.sum()!r}")
        if not (np.all(np.isfinite(means)) and np.all(np.isfinite(vars_))):
            raise ValidationError("non-finite mixture parameters")
        if np.any(vars_ <= 0):
            raise ValidationError("variances must be strictly positive")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "vars", vars_)
        if self.label_dist is not None:
            ld = np.asarray(self.label_dist, dtype=np.float64)
            if ld.ndim != 2 or ld.shape[0] != K:
                raise ValidationError("label_dist must be (K, n_classes)")
            if np.any(ld < -1e-12) or np.any(ld > 1 + 1e-12):
                raise ValidationError("label_dist entries must lie in [0, 1]")
            if np.abs(ld.sum(axis=1) - 1.0).max() > 1e-9:
                raise ValidationError("label_dist rows must sum to 1")
            object.__setattr__(self, "label_dist", ld)

    @property
    def K(self) -> int:
        return self.weights.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]

    def component(self, k: int) -> DiagGaussian:
        return DiagGaussian(self.means[k], self.vars[k])

    def to_json(self) -> dict:
        out = {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "vars": self.vars.tolist(),
        }
        if self.label_dist is not None:
            out["label_dist"] = self.label_dist.tolist()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Gmm":
        return cls(
            np.asarray(obj["weights"], dtype=np.float64),
            np.asarray(obj["means"], dtype=np.float64),
            np.asarray(obj["vars"], dtype=np.float64),
            np.asarray(obj["label_dist"], dtype=np.float64)
            if obj.get("label_dist") is not None else None,
        )


def save_gmm(gmm: Gmm, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(gmm.to_json(), fh)
        fh.write("\n")


def load_gmm(path) -> Gmm:
    with open(path, encoding="utf-8") as fh:
        return Gmm.from_json(json.load(fh))


def _variance_floor(X: np.ndarray) -> np.ndarray:
    return np.maximum(VAR_FLOOR_REL * X.var(axis=0), VAR_FLOOR_ABS)


def _log_weighted_densities(X, weights, means, vars_) -> np.ndarray:
    """(n, K) matrix of log(pi_k) + log N(x_i; mu_k, diag var_k)."""
    n, d = X.shape
    K = weights.shape[0]
    out = np.empty((n, K))
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)
    for k in range(K):
        diff = X - means[k]
        quad = np.sum(diff * diff / vars_[k], axis=1)
        out[:, k] = log_w[k] - 0.5 * (
            d * np.log(2.0 * np.pi) + np.sum(np.log(vars_[k])) + quad
        )
    return out


def responsibilities(gmm: Gmm, X: np.ndarray) -> np.ndarray:
    """Row-stochastic (n, K) posterior over components, log-sum-exp stable."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != gmm.d:
        raise ValidationError(f"X must be (n, {gmm.d})")
    log_wd = _log_weighted_densities(X, gmm.weights, gmm.means, gmm.vars)
    return np.exp(log_wd - logsumexp(log_wd, axis=1, keepdims=True))


def log_likelihood(gmm: Gmm, X: np.ndarray) -> float:
    """Mean log density of X under the mixture."""
    X = np.asarray(X, dtype=np.float64)
    log_wd = _log_weighted_densities(X, gmm.weights, gmm.means, gmm.vars)
    return float(logsumexp(log_wd, axis=1).mean())


def bic(gmm: Gmm, X: np.ndarray) -> float:
    """Bayesian information criterion; lower is better."""
    n = X.shape[0]
    n_params = (gmm.K - 1) + 2 * gmm.K * gmm.d
    return -2.0 * n * log_likelihood(gmm, X) + n_params * np.log(n)


def kmeans_pp_init(data: Dataset, K: int, seed: int = 0) -> Gmm:
    """k-means++ seeding plus a short Lloyd refinement, as an EM start.

    Deterministic given the seed; degenerate seeding ties fall back to the
    lowest unused point index.
    """
    X = data.features
    n, d = X.shape
    if K < 1:
        raise ValidationError("K must be >= 1")
    if K > n:
        raise ValidationError(f"K={K} exceeds number of samples n={n}")
    rng = np.random.default_rng(seed)
    floor = _variance_floor(X)

    chosen = [int(rng.integers(n))]
    d2 = np.sum((X - X[chosen[0]]) ** 2, axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total <= 0.0:
            # all remaining mass at distance zero: take lowest unused index
            unused = np.setdiff1d(np.arange(n), chosen)
            idx = int(unused[0])
        else:
            u = rng.random()
            idx = int(np.searchsorted(np.cumsum(d2 / total), u, side="right"))
            idx = min(idx, n - 1)
        chosen.append(idx)
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))

    centers = X[chosen].copy()
    assign = None
    for _ in range(_LLOYD_MAX_ITER):
        dist = (
            np.sum(X**2, axis=1)[:, None]
            - 2.0 * X @ centers.T
            + np.sum(centers**2, axis=1)[None, :]
        )
        new_assign = np.argmin(dist, axis=1)
        for k in range(K):
            mask = new_assign == k
            if not mask.any():
                # steal the point farthest from its current center
                far = int(np.argmax(dist[np.arange(n), new_assign]))
                new_assign[far] = k
                mask = new_assign == k
            centers[k] = X[mask].mean(axis=0)
        if assign is not None and np.array_equal(assign, new_assign):
            break
        assign = new_assign

    weights = np.bincount(assign, minlength=K).astype(np.float64) / n
    vars_ = np.empty((K, d))
    for k in range(K):
        mask = assign == k
        vars_[k] = np.maximum(X[mask].var(axis=0), floor)
    return Gmm(weights, centers, vars_)


def _em_single(X, init: Gmm, floor, max_iter, tol):
    n = X.shape[0]
    weights = init.weights.copy()
    means = init.means.copy()
    vars_ = np.maximum(init.vars, floor)
    trace = []
    prev_ll = -np.inf
    for _ in range(max_iter):
        log_wd = _log_weighted_densities(X, weights, means, vars_)
        norm = logsumexp(log_wd, axis=1)
        ll = float(norm.mean())
        trace.append(ll)
        resp = np.exp(log_wd - norm[:, None])

        mass = resp.sum(axis=0)
        weights = mass / n
        dead = mass < _DEAD_COMPONENT_MASS
        safe = np.maximum(mass, _DEAD_COMPONENT_MASS)
        new_means = (resp.T @ X) / safe[:, None]
        new_vars = np.empty_like(vars_)
        for k in range(weights.shape[0]):
            diff = X - new_means[k]
            new_vars[k] = (resp[:, k] @ (diff * diff)) / safe[k]
        # components that lost all mass keep their previous parameters
        new_means[dead] = means[dead]
        new_vars[dead] = vars_[dead]
        means = new_means
        vars_ = np.maximum(new_vars, floor)

        if abs(ll - prev_ll) < tol:
            break
        prev_ll = ll
    return Gmm(weights, means, vars_), np.asarray(trace)


def em_fit(
    data: Dataset,
    K: int,
    max_iter: int = 300,
    tol: float = 1e-5,
    seed: int = 0,
    n_restarts: int = 3,
) -> tuple[Gmm, np.ndarray]:
    """Fit a K-component diagonal GMM by EM with restarts.

    Runs ``n_restarts`` EM runs seeded seed, seed+1, ... and keeps the one
    with the highest final mean log-likelihood.  Returns (gmm, trace) where
    trace is the winner's per-iteration mean log-likelihood.  Stops a run
    when the change in mean log-likelihood drops below ``tol``.
    """
    if max_iter < 1:
        raise ValidationError("max_iter must be >= 1")
    if tol <= 0:
        raise ValidationError("tol must be positive")
    if n_restarts < 1:
        raise ValidationError("n_restarts must be >= 1")
    X = data.features
    if K > X.shape[0]:
        raise ValidationError(f"K={K} exceeds number of samples n={X.shape[0]}")
    floor = _variance_floor(X)

    best: tuple[Gmm, np.ndarray] | None = None
    for r in range(n_restarts):
        init = kmeans_pp_init(data, K, seed + r)
        gmm, trace = _em_single(X, init, floor, max_iter, tol)
        if best is None or trace[-1] > best[1][-1]:
            best = (gmm, trace)
    return best


def label_components(gmm: Gmm, data: Dataset) -> Gmm:
    """Attach P(Y | component) to a mixture fitted on labeled data.

    Row k is the responsibility-weighted class histogram
    sum_i resp(i, k) * onehot(y_i) / sum_i resp(i, k).  Components with
    vanishing responsibility mass fall back to the global label frequency
    (reported via a RuntimeWarning).
    """
    if data.labels is None:
        raise ValidationError("data must be labeled")
    resp = responsibilities(gmm, data.features)
    onehot = data.one_hot_labels()
    mass = resp.sum(axis=0)
    counts = resp.T @ onehot
    label_dist = np.empty_like(counts)
    starved = mass < 1e-12
    if starved.any():
        warnings.warn(
            f"{int(starved.sum())} component(s) received no responsibility "
            "mass; using global label frequencies for them",
            RuntimeWarning,
        )
        label_dist[starved] = onehot.mean(axis=0)
    ok = ~starved
    label_dist[ok] = counts[ok] / mass[ok, None]
    label_dist = np.clip(label_dist, 0.0, 1.0)
    return replace(gmm, label_dist=label_dist)


def sample(gmm: Gmm, n: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Draw n points; returns (X, component_ids) so labels can be inherited."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = np.random.default_rng(seed)
    ids = rng.choice(gmm.K, size=n, p=gmm.weights)
    X = gmm.means[ids] + np.sqrt(gmm.vars[ids]) * rng.standard_normal((n, gmm.d))
    return X, ids
