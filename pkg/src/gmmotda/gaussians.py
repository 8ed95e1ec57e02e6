"""Closed-form transport between Gaussians.

Squared-Euclidean optimal transport between two Gaussians has an affine
optimal map T(x) = Ax + b and an explicit distance.  The diagonal case is
used for mixture components; the full-covariance case backs the linear
baseline.  Matrix square roots go through a self-contained cyclic Jacobi
eigensolver, adequate up to a few hundred dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class DiagGaussian:
    """Gaussian with diagonal covariance; ``var`` holds the diagonal."""

    mean: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        var = np.asarray(self.var, dtype=np.float64)
        if mean.ndim != 1 or var.shape != mean.shape:
            raise ValidationError("mean and var must be 1-D with equal length")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(var))):
            raise ValidationError("non-finite Gaussian parameters")
        if np.any(var <= 0):
            raise ValidationError("variances must be strictly positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", var)

    @property
    def d(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class FullGaussian:
    """Gaussian with a full symmetric PSD covariance matrix.

    Symmetry is required within 1e-8 at construction (the matrix is then
    symmetrized); slightly negative eigenvalues are clamped to zero inside
    the transport operations.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.cov, dtype=np.float64)
        if mean.ndim != 1:
            raise ValidationError("mean must be 1-D")
        d = mean.shape[0]
        if cov.shape != (d, d):
            raise ValidationError(f"cov must be ({d}, {d}), got {cov.shape}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValidationError("non-finite Gaussian parameters")
        _check_symmetric(cov)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", (cov + cov.T) / 2.0)

    @property
    def d(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class AffineMap:
    """x -> A x + b."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValidationError("A must be square")
        if b.shape != (A.shape[0],):
            raise ValidationError("b must match A")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValidationError("non-finite affine map")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return X @ self.A.T + self.b

    def to_json(self) -> dict:
        return {"A": self.A.tolist(), "b": self.b.tolist()}


def fit_full_gaussian(X: np.ndarray) -> FullGaussian:
    """Empirical mean and population covariance (divisor n)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValidationError("need at least 2 samples to fit a Gaussian")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = (Xc.T @ Xc) / X.shape[0]
    return FullGaussian(mean, cov)


def _check_symmetric(M: np.ndarray, tol: float = 1e-8) -> None:
    scale = max(1.0, float(np.abs(M).max()))
    if np.abs(M - M.T).max() > tol * scale:
        raise ValidationError("matrix is not symmetric")


def jacobi_eigh(M: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) with eigenvectors in columns,
    M @ V = V @ diag(w).  Sweeps stop once the off-diagonal Frobenius mass
    drops below tol relative to the matrix norm.
    """
    A = np.array(M, dtype=np.float64)
    d = A.shape[0]
    V = np.eye(d)
    if d == 1:
        return A.diagonal().copy(), V
    norm = np.linalg.norm(A)
    if norm == 0.0:
        return np.zeros(d), V

    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(A**2) - np.sum(A.diagonal() ** 2))
        if off <= tol * norm:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                if abs(apq) <= tol * norm * 1e-4:
                    continue
                # symmetric Schur 2x2 rotation zeroing A[p, q]
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q

                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq

    return A.diagonal().copy(), V


def sym_sqrt(M: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root; negative eigenvalues are clamped to 0."""
    M = np.asarray(M, dtype=np.float64)
    _check_symmetric(M)
    sym = (M + M.T) / 2.0
    w, V = jacobi_eigh(sym)
    w = np.maximum(w, 0.0)
    S = (V * np.sqrt(w)) @ V.T
    return (S + S.T) / 2.0


def w2_diag(P: DiagGaussian, Q: DiagGaussian) -> float:
    """W2 distance between diagonal Gaussians.

    W2^2 = ||mu_P - mu_Q||^2 + sum_l (sqrt(vP_l) - sqrt(vQ_l))^2.
    """
    if P.d != Q.d:
        raise ValidationError("dimension mismatch")
    sq = np.sum((P.mean - Q.mean) ** 2) + np.sum((np.sqrt(P.var) - np.sqrt(Q.var)) ** 2)
    return float(np.sqrt(max(sq, 0.0)))


def pairwise_w2_diag_sq(means1, vars1, means2, vars2) -> np.ndarray:
    """(K1, K2) matrix of squared W2 distances between diagonal Gaussians."""
    means1 = np.asarray(means1, dtype=np.float64)
    means2 = np.asarray(means2, dtype=np.float64)
    s1 = np.sqrt(np.asarray(vars1, dtype=np.float64))
    s2 = np.sqrt(np.asarray(vars2, dtype=np.float64))
    dm = ((means1[:, None, :] - means2[None, :, :]) ** 2).sum(axis=2)
    ds = ((s1[:, None, :] - s2[None, :, :]) ** 2).sum(axis=2)
    return np.maximum(dm + ds, 0.0)


def monge_map_diag(P: DiagGaussian, Q: DiagGaussian) -> AffineMap:
    """Optimal affine map between diagonal Gaussians.

    A = diag(sqrt(vQ_l / vP_l)), b = mu_Q - A mu_P.
    """
    if P.d != Q.d:
        raise ValidationError("dimension mismatch")
    a = np.sqrt(Q.var / P.var)
    A = np.diag(a)
    b = Q.mean - a * P.mean
    return AffineMap(A, b)


def default_ridge(cov: np.ndarray) -> float:
    d = cov.shape[0]
    return 1e-6 * float(np.trace(cov)) / d


def monge_map_full(P: FullGaussian, Q: FullGaussian, reg: float | None = None) -> AffineMap:
    """Optimal affine map between full-covariance Gaussians.

    A = SP^{-1/2} (SP^{1/2} SQ SP^{1/2})^{1/2} SP^{-1/2}, b = mu_Q - A mu_P,
    with a ridge term added to both covariances for invertibility.  When
    ``reg`` is None each covariance gets 1e-6 * trace / d.
    """
    if P.d != Q.d:
        raise ValidationError("dimension mismatch")
    reg_p = default_ridge(P.cov) if reg is None else float(reg)
    reg_q = default_ridge(Q.cov) if reg is None else float(reg)
    cov_p = P.cov + reg_p * np.eye(P.d)
    cov_q = Q.cov + reg_q * np.eye(Q.d)

    w, V = jacobi_eigh(cov_p)
    w = np.maximum(w, 0.0)
    if np.any(w <= 0):
        raise ValidationError(
            "source covariance is singular even after ridge regularization"
        )
    sqrt_p = (V * np.sqrt(w)) @ V.T
    inv_sqrt_p = (V / np.sqrt(w)) @ V.T

    mid = sym_sqrt(sqrt_p @ cov_q @ sqrt_p)
    A = inv_sqrt_p @ mid @ inv_sqrt_p
    A = (A + A.T) / 2.0
    b = Q.mean - A @ P.mean
    return AffineMap(A, b)


def w2_full(P: FullGaussian, Q: FullGaussian) -> float:
    """W2 distance between full-covariance Gaussians (Bures form).

    W2^2 = ||mu_P - mu_Q||^2
         + trace(SP + SQ - 2 (SP^{1/2} SQ SP^{1/2})^{1/2}).
    """
    if P.d != Q.d:
        raise ValidationError("dimension mismatch")
    sqrt_p = sym_sqrt(P.cov)
    cross = sym_sqrt(sqrt_p @ Q.cov @ sqrt_p)
    sq = float(
        np.sum((P.mean - Q.mean) ** 2)
        + np.trace(P.cov) + np.trace(Q.cov) - 2.0 * np.trace(cross)
    )
    return float(np.sqrt(max(sq, 0.0)))
