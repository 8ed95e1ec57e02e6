"""Empirical-transport and linear-map adaptation baselines.

Both follow the classic recipe: estimate a coupling (or affine map)
between raw source and target samples, move the source points, and keep
their labels.  These are the comparison points for the mixture-based
strategies.
"""

from __future__ import annotations

import numpy as np

from .adaptation import AdaptationResult, _class_counts
from .data import Dataset
from .errors import ValidationError
from .gaussians import fit_full_gaussian, monge_map_full
from .solvers import (
    barycentric_map,
    solve_exact,
    solve_sinkhorn,
    squared_euclidean_cost,
    uniform_histogram,
)

_PAIR_BUDGET = 4_000_000


def _check_pair(X_src, X_tgt, allow_large):
    X_src = np.asarray(X_src, dtype=np.float64)
    X_tgt = np.asarray(X_tgt, dtype=np.float64)
    if X_src.ndim != 2 or X_tgt.ndim != 2 or X_src.shape[1] != X_tgt.shape[1]:
        raise ValidationError("source/target must be 2-D with the same dimension")
    n, m = X_src.shape[0], X_tgt.shape[0]
    if n * m > _PAIR_BUDGET and not allow_large:
        raise ValidationError(
            f"empirical transport on {n}x{m} pairs exceeds the {_PAIR_BUDGET} "
            "budget; subsample or pass allow_large=True"
        )
    return X_src, X_tgt


def otda_empirical(
    X_src: np.ndarray,
    y_src: np.ndarray,
    X_tgt: np.ndarray,
    solver: str = "exact",
    epsilon: float | None = None,
    allow_large: bool = False,
) -> AdaptationResult:
    """Transport source samples onto the target cloud, keeping labels.

    Solves empirical OT between uniform measures under squared Euclidean
    cost, then replaces each source point by its barycentric image.
    `solver` is "exact" or "sinkhorn"; the Sinkhorn epsilon defaults to
    0.01 * mean(C).
    """
    X_src, X_tgt = _check_pair(X_src, X_tgt, allow_large)
    y = np.asarray(y_src)
    if y.shape != (X_src.shape[0],):
        raise ValidationError("labels do not match the source points")
    C = squared_euclidean_cost(X_src, X_tgt)
    p = uniform_histogram(X_src.shape[0])
    q = uniform_histogram(X_tgt.shape[0])
    if solver == "exact":
        plan = solve_exact(p, q, C)
        strategy = "otda-emd"
    elif solver == "sinkhorn":
        if epsilon is None:
            epsilon = 0.01 * float(C.mean())
            if epsilon <= 0.0:
                epsilon = 1e-6
        plan = solve_sinkhorn(p, q, C, epsilon=epsilon)
        strategy = "otda-sinkhorn"
    else:
        raise ValidationError(f"unknown empirical solver {solver!r}")
    moved = barycentric_map(plan, X_tgt)
    points = Dataset(moved, y.astype(np.int64))
    diag = {
        "strategy": strategy,
        "mw2": None,
        "support_size": plan.n_positive(),
        "per_class_counts": _class_counts(points.labels),
        "plan": plan.diagnostics(),
    }
    return AdaptationResult(strategy=strategy, transported_points=points, diagnostics=diag)


def otda_linear(
    X_src: np.ndarray,
    y_src: np.ndarray,
    X_tgt: np.ndarray,
    reg: float | None = None,
) -> AdaptationResult:
    """Affine Monge map under a Gaussian fit of each domain."""
    X_src = np.asarray(X_src, dtype=np.float64)
    X_tgt = np.asarray(X_tgt, dtype=np.float64)
    if X_src.ndim != 2 or X_tgt.ndim != 2 or X_src.shape[1] != X_tgt.shape[1]:
        raise ValidationError("source/target must be 2-D with the same dimension")
    y = np.asarray(y_src)
    if y.shape != (X_src.shape[0],):
        raise ValidationError("labels do not match the source points")
    P = fit_full_gaussian(X_src)
    Q = fit_full_gaussian(X_tgt)
    amap = monge_map_full(P, Q, reg=reg)
    points = Dataset(amap.apply(X_src), y.astype(np.int64))
    diag = {
        "strategy": "otda-linear",
        "mw2": None,
        "support_size": None,
        "per_class_counts": _class_counts(points.labels),
        "map": amap.to_json(),
    }
    return AdaptationResult(
        strategy="otda-linear", transported_points=points, diagnostics=diag
    )
