"""Mixture-level optimal transport and label-transfer strategies.

The discrete MW2 problem couples two fitted mixtures through an exact
plan on their component weights, with pairwise squared Gaussian W2 as
the ground cost.  Three adaptation strategies consume the plan:

* ``adapt_map`` scores target points against the transferred
  per-component label distributions (posterior argmax).
* ``adapt_sample`` draws a labeled synthetic sample from the labeled
  target mixture.
* ``adapt_transport`` pushes source points through the
  responsibility-weighted average of the component Monge maps.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, _freeze
from .errors import ValidationError
from .gaussians import AffineMap, monge_map_diag, pairwise_w2_diag_sq
from .gmm import Gmm, responsibilities, sample
from .solvers import TransportPlan, solve_exact

_SUPPORT_TOL = 0.0


@dataclass(frozen=True)
class MixturePlan:
    """Optimal coupling between the components of two mixtures."""

    gamma: np.ndarray
    mw2_squared: float
    component_maps: dict[tuple[int, int], AffineMap]
    src: Gmm
    tgt: Gmm

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=np.float64)
        if g.shape != (self.src.K, self.tgt.K):
            raise ValidationError("plan shape does not match mixture sizes")
        if np.any(g < 0.0):
            raise ValidationError("plan has negative entries")
        viol = max(
            float(np.abs(g.sum(axis=1) - self.src.weights).max()),
            float(np.abs(g.sum(axis=0) - self.tgt.weights).max()),
        )
        if viol > 1e-9:
            raise ValidationError(f"plan marginals off by {viol:.3g} (> 1e-9)")
        support = {(int(i), int(j)) for i, j in zip(*np.nonzero(g > _SUPPORT_TOL))}
        if set(self.component_maps) != support:
            raise ValidationError("component maps must be keyed by the plan support")
        object.__setattr__(self, "gamma", _freeze(g))

    @property
    def support(self) -> list[tuple[int, int]]:
        return sorted(self.component_maps)

    @property
    def mw2(self) -> float:
        return float(np.sqrt(max(self.mw2_squared, 0.0)))


@dataclass(frozen=True)
class AdaptationResult:
    """Output of one adaptation strategy.

    Exactly one of `predicted_labels` (strategy M) or
    `transported_points` (strategies E and T) is set.
    """

    strategy: str
    predicted_labels: np.ndarray | None = None
    transported_points: Dataset | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        has_labels = self.predicted_labels is not None
        has_points = self.transported_points is not None
        if has_labels == has_points:
            raise ValidationError(
                "exactly one of predicted_labels / transported_points must be set"
            )
        if has_labels:
            lab = np.asarray(self.predicted_labels, dtype=np.int64)
            if lab.ndim != 1:
                raise ValidationError("predicted_labels must be 1-D")
            object.__setattr__(self, "predicted_labels", _freeze(lab))
        elif self.transported_points.labels is None:
            raise ValidationError("transported points must be labeled")


def _class_counts(labels: np.ndarray) -> dict[int, int]:
    vals, counts = np.unique(labels, return_counts=True)
    return {int(v): int(c) for v, c in zip(vals, counts)}


def mixture_plan(src: Gmm, tgt: Gmm) -> MixturePlan:
    """Exact MW2 coupling of two diagonal mixtures.

    The ground cost between components i and j is the squared Gaussian
    W2 distance; the plan is a vertex of the transport polytope over
    the mixture weights, and each supported pair carries its closed-form
    Monge map.
    """
    if src.d != tgt.d:
        raise ValidationError("mixtures live in different dimensions")
    cost = pairwise_w2_diag_sq(src.means, src.vars, tgt.means, tgt.vars)
    plan = solve_exact(src.weights, tgt.weights, cost)
    maps = {}
    for i, j in zip(*np.nonzero(plan.gamma > _SUPPORT_TOL)):
        maps[(int(i), int(j))] = monge_map_diag(src.component(i), tgt.component(j))
    return MixturePlan(
        gamma=plan.gamma,
        mw2_squared=float(plan.cost),
        component_maps=maps,
        src=src,
        tgt=tgt,
    )


def mw2_distance(src: Gmm, tgt: Gmm) -> float:
    """Mixture Wasserstein distance, the square root of the MW2 plan cost."""
    return mixture_plan(src, tgt).mw2


def transfer_component_labels(plan: MixturePlan, src: Gmm) -> Gmm:
    """Push per-component label distributions through the plan.

    Each target component j receives the plan-weighted average of the
    source label rows: Q(y|j) = sum_i gamma_ij P(y|i) / sum_i gamma_ij.
    Target components with zero plan mass (possible only for zero-weight
    components) fall back to the global source label frequency.
    """
    if src.label_dist is None:
        raise ValidationError("source mixture has no label distributions")
    if plan.gamma.shape[0] != src.K:
        raise ValidationError("plan does not match the source mixture")
    col_mass = plan.gamma.sum(axis=0)
    weighted = plan.gamma.T @ src.label_dist
    global_freq = src.weights @ src.label_dist
    global_freq = global_freq / global_freq.sum()
    out = np.empty_like(weighted)
    for j in range(out.shape[0]):
        if col_mass[j] > 0.0:
            out[j] = weighted[j] / col_mass[j]
        else:
            warnings.warn(
                f"target component {j} got no plan mass; using global label "
                "frequency",
                RuntimeWarning,
                stacklevel=2,
            )
            out[j] = global_freq
    out = np.clip(out, 0.0, 1.0)
    return replace(plan.tgt, label_dist=out)


def adapt_map(
    tgt: Gmm, X_target: np.ndarray, plan: MixturePlan | None = None
) -> AdaptationResult:
    """Strategy M: posterior argmax labeling of target points.

    Scores each point by sum_k resp(x, k) * Q(y|k) and takes the argmax
    over classes, ties going to the lowest class index.
    """
    if tgt.label_dist is None:
        raise ValidationError("target mixture has no label distributions")
    resp = responsibilities(tgt, X_target)
    scores = resp @ tgt.label_dist
    labels = np.argmax(scores, axis=1).astype(np.int64)
    diag = {
        "strategy": "gmm-otda-m",
        "mw2": plan.mw2 if plan is not None else None,
        "support_size": len(plan.component_maps) if plan is not None else None,
        "per_class_counts": _class_counts(labels),
    }
    return AdaptationResult(
        strategy="gmm-otda-m", predicted_labels=labels, diagnostics=diag
    )


def adapt_sample(
    tgt: Gmm, n: int, seed: int = 0, plan: MixturePlan | None = None
) -> AdaptationResult:
    """Strategy E: draw a labeled sample from the labeled target mixture.

    Points come from `sample`; each label is one categorical draw from
    the originating component's label row.
    """
    if tgt.label_dist is None:
        raise ValidationError("target mixture has no label distributions")
    if n < 1:
        raise ValidationError("sample size must be at least 1")
    X, ids = sample(tgt, n, seed=seed)
    rng = np.random.default_rng(seed + 1)
    rows = tgt.label_dist[ids]
    cdf = np.cumsum(rows, axis=1)
    u = rng.random(n) * cdf[:, -1]
    labels = np.sum(cdf < u[:, None], axis=1).astype(np.int64)
    labels = np.minimum(labels, tgt.label_dist.shape[1] - 1)
    points = Dataset(X, labels, n_classes=tgt.label_dist.shape[1])
    diag = {
        "strategy": "gmm-otda-e",
        "mw2": plan.mw2 if plan is not None else None,
        "support_size": len(plan.component_maps) if plan is not None else None,
        "per_class_counts": _class_counts(labels),
    }
    return AdaptationResult(
        strategy="gmm-otda-e", transported_points=points, diagnostics=diag
    )


def adapt_transport(
    plan: MixturePlan,
    src_gmm: Gmm,
    X_source: np.ndarray,
    y_source: np.ndarray,
) -> AdaptationResult:
    """Strategy T: push source points through the averaged component maps.

    T(x) = sum_{i,j} resp(x, i) * (gamma_ij / pi_i) * T_{i->j}(x), an
    average of the supported affine maps weighted by responsibility and
    by the conditional plan.  Transported points keep their source
    labels.
    """
    X = np.asarray(X_source, dtype=np.float64)
    y = np.asarray(y_source)
    if X.ndim != 2 or X.shape[1] != src_gmm.d:
        raise ValidationError("source points do not match the mixture dimension")
    if y.shape != (X.shape[0],):
        raise ValidationError("labels do not match the source points")
    if plan.gamma.shape[0] != src_gmm.K:
        raise ValidationError("plan does not match the source mixture")
    resp = responsibilities(src_gmm, X)
    if not np.all(np.isfinite(resp)):
        raise ValidationError("non-finite responsibilities on source points")
    out = np.zeros_like(X)
    pi = src_gmm.weights
    for (i, j), amap in plan.component_maps.items():
        w = plan.gamma[i, j] / pi[i]
        if w == 0.0:
            continue
        out += (resp[:, i] * w)[:, None] * amap.apply(X)
    points = Dataset(out, y.astype(np.int64))
    diag = {
        "strategy": "gmm-otda-t",
        "mw2": plan.mw2,
        "support_size": len(plan.component_maps),
        "per_class_counts": _class_counts(points.labels),
    }
    return AdaptationResult(
        strategy="gmm-otda-t", transported_points=points, diagnostics=diag
    )
