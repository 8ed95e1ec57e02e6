"""Plot-data emission: 2-D scatter CSVs and a small standalone SVG.

Figures themselves are out of scope; this module writes the data behind
them.  Inputs with more than two dimensions are projected onto their top
two principal components (power iteration), with the captured variance
fraction reported in a JSON sidecar.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ValidationError
from .experiment import write_text_atomic

ROLES = ("source", "target", "transported")

SCATTER_HEADER = "x,y,label,role"

_PALETTE = (
    "#4363d8",
    "#e6194b",
    "#3cb44b",
    "#f58231",
    "#911eb4",
    "#46f0f0",
    "#9a6324",
    "#808000",
)


def _power_iteration(G: np.ndarray, v0: np.ndarray, n_steps: int) -> np.ndarray:
    v = v0 / np.linalg.norm(v0)
    for _ in range(n_steps):
        w = G @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return v
        v = w / norm
    return v


def pca_top2(X: np.ndarray, n_steps: int = 200) -> tuple[np.ndarray, float]:
    """Top-2 principal directions and the variance fraction they capture.

    Power iteration with deflation on the Gram matrix; the start vector
    is a fixed pseudorandom draw so results are deterministic.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 2:
        raise ValidationError("PCA needs a 2-D input with at least 2 columns")
    d = X.shape[1]
    Xc = X - X.mean(axis=0)
    G = (Xc.T @ Xc) / max(X.shape[0], 1)
    total = float(np.trace(G))
    rng = np.random.default_rng(0)
    comps = np.zeros((2, d))
    captured = 0.0
    deflated = G.copy()
    for r in range(2):
        v = _power_iteration(deflated, rng.standard_normal(d), n_steps)
        lam = float(v @ deflated @ v)
        comps[r] = v
        captured += max(lam, 0.0)
        deflated = deflated - lam * np.outer(v, v)
    fraction = 1.0 if total <= 0.0 else min(captured / total, 1.0)
    return comps, fraction


def project_2d(X: np.ndarray, comps: np.ndarray | None = None) -> np.ndarray:
    """Project to 2-D: identity for d=2, PCA components otherwise."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError("points must be a 2-D array")
    if X.shape[1] == 2:
        return X
    if comps is None:
        comps, _ = pca_top2(X)
    return X @ comps.T


def emit_plot_data(
    groups: list[tuple[np.ndarray, np.ndarray | None, str]],
    out_csv,
    svg_path=None,
) -> dict:
    """Write scatter rows (x, y, label, role) for the given point groups.

    Unlabeled groups get label -1.  When inputs have d > 2, one shared
    PCA basis is fit on the union of all groups.  A JSON sidecar at
    `<out_csv>.meta.json` records the projection and counts.  Returns
    the sidecar dict.
    """
    clean: list[tuple[np.ndarray, np.ndarray, str]] = []
    d = None
    for X, labels, role in groups:
        if role not in ROLES:
            raise ValidationError(f"unknown role {role!r}; choose from {ROLES}")
        X = np.asarray(X, dtype=np.float64)
        if X.size == 0:
            continue
        if X.ndim != 2:
            raise ValidationError("points must be 2-D arrays")
        if d is None:
            d = X.shape[1]
        elif X.shape[1] != d:
            raise ValidationError("all groups must share a dimension")
        if labels is None:
            lab = np.full(X.shape[0], -1, dtype=np.int64)
        else:
            lab = np.asarray(labels, dtype=np.int64)
            if lab.shape != (X.shape[0],):
                raise ValidationError("labels do not match points")
        clean.append((X, lab, role))

    meta = {"schema": 1, "projection": "identity", "variance_captured": 1.0}
    if clean and d is not None and d > 2:
        union = np.vstack([X for X, _, _ in clean])
        comps, fraction = pca_top2(union)
        clean = [(project_2d(X, comps), lab, role) for X, lab, role in clean]
        meta["projection"] = "pca-top2"
        meta["variance_captured"] = fraction
    meta["counts"] = {role: 0 for role in ROLES}
    for _, lab, role in clean:
        meta["counts"][role] += int(lab.size)

    lines = [SCATTER_HEADER]
    for X, lab, role in clean:
        for i in range(X.shape[0]):
            lines.append(f"{X[i, 0]:.17g},{X[i, 1]:.17g},{lab[i]},{role}")
    write_text_atomic(out_csv, "\n".join(lines) + "\n")
    write_text_atomic(
        f"{out_csv}.meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n"
    )
    if svg_path is not None:
        write_scatter_svg(svg_path, clean)
    return meta


def write_scatter_svg(
    path, groups: list[tuple[np.ndarray, np.ndarray, str]], size: int = 480
) -> None:
    """Standalone SVG scatter; color by label, marker shape by role."""
    pts = [X for X, _, _ in groups if X.size]
    if pts:
        allp = np.vstack(pts)
        lo = allp.min(axis=0)
        hi = allp.max(axis=0)
        span = np.maximum(hi - lo, 1e-9)
    else:
        lo = np.zeros(2)
        span = np.ones(2)
    pad = 20

    def to_px(p):
        x = pad + (p[0] - lo[0]) / span[0] * (size - 2 * pad)
        y = size - pad - (p[1] - lo[1]) / span[1] * (size - 2 * pad)
        return x, y

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for X, lab, role in groups:
        for i in range(X.shape[0]):
            x, y = to_px(X[i])
            color = _PALETTE[lab[i] % len(_PALETTE)] if lab[i] >= 0 else "#888888"
            if role == "source":
                parts.append(
                    f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2.4" fill="{color}" '
                    'fill-opacity="0.75"/>'
                )
            elif role == "target":
                parts.append(
                    f'<rect x="{x - 2.2:.2f}" y="{y - 2.2:.2f}" width="4.4" '
                    f'height="4.4" fill="{color}" fill-opacity="0.75"/>'
                )
            else:
                parts.append(
                    f'<path d="M {x:.2f} {y - 3:.2f} L {x - 2.6:.2f} {y + 2.2:.2f} '
                    f'L {x + 2.6:.2f} {y + 2.2:.2f} Z" fill="{color}" '
                    'fill-opacity="0.75"/>'
                )
    parts.append("</svg>")
    write_text_atomic(path, "\n".join(parts) + "\n")
