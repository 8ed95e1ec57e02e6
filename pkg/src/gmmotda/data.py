"""Datasets: CSV ingestion, standardization and synthetic shift generators."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CsvFormatError, ValidationError

# Per-dimension scales below this are clamped to avoid division blow-up.
SCALE_FLOOR = 1e-12


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """An (n, d) feature matrix with optional integer class labels.

    Labels, when present, are contiguous integers in {0, ..., n_classes-1}.
    Instances are immutable: the underlying arrays are marked read-only.
    """

    features: np.ndarray
    labels: np.ndarray | None = None
    n_classes: int | None = None

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2:
            raise ValidationError(f"features must be 2-D, got shape {feats.shape}")
        n, d = feats.shape
        if n < 1 or d < 1:
            raise ValidationError(f"need n >= 1 and d >= 1, got ({n}, {d})")
        if not np.all(np.isfinite(feats)):
            raise ValidationError("features contain NaN or Inf")
        object.__setattr__(self, "features", _freeze(feats))

        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (n,):
                raise ValidationError(
                    f"labels must have shape ({n},), got {labels.shape}"
                )
            if not np.issubdtype(labels.dtype, np.integer):
                if not np.all(labels == np.floor(labels)):
                    raise ValidationError("labels must be integers")
            labels = labels.astype(np.int64)
            if labels.min() < 0:
                raise ValidationError("labels must be nonnegative")
            if self.n_classes is None:
                object.__setattr__(self, "n_classes", int(labels.max()) + 1)
            elif self.n_classes < 1:
                raise ValidationError("labeled datasets need n_classes >= 1")
            if labels.min() < 0 or labels.max() >= self.n_classes:
                raise ValidationError(
                    f"labels must lie in [0, {self.n_classes}), "
                    f"got range [{labels.min()}, {labels.max()}]"
                )
            object.__setattr__(self, "labels", _freeze(labels))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def without_labels(self) -> "Dataset":
        """Unlabeled view handed to adaptation methods (labels stay held back)."""
        return Dataset(self.features)

    def one_hot_labels(self) -> np.ndarray:
        """(n, n_classes) one-hot encoding, built on demand."""
        if self.labels is None:
            raise ValidationError("dataset has no labels")
        out = np.zeros((self.n, self.n_classes), dtype=np.float64)
        out[np.arange(self.n), self.labels] = 1.0
        return out


@dataclass(frozen=True)
class StandardizationParams:
    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        scale = np.asarray(self.scale, dtype=np.float64)
        if mean.ndim != 1 or scale.shape != mean.shape:
            raise ValidationError("mean and scale must be 1-D with equal length")
        if np.any(scale < SCALE_FLOOR):
            raise ValidationError(f"scale entries must be >= {SCALE_FLOOR}")
        object.__setattr__(self, "mean", _freeze(mean))
        object.__setattr__(self, "scale", _freeze(scale))


def standardize(
    train: Dataset, others: list[Dataset]
) -> tuple[StandardizationParams, list[Dataset]]:
    """Fit per-dimension mean/scale on ``train`` and apply to ``others``.

    Population convention (divisor n) for the standard deviation; constant
    columns are clamped to SCALE_FLOOR.  Apply the returned params to
    ``train`` itself via :func:`apply_standardization`.
    """
    for other in others:
        if other.d != train.d:
            raise ValidationError(
                f"dimension mismatch: train d={train.d}, other d={other.d}"
            )
    mean = train.features.mean(axis=0)
    scale = np.maximum(train.features.std(axis=0), SCALE_FLOOR)
    params = StandardizationParams(mean, scale)
    return params, [apply_standardization(params, ds) for ds in others]


def apply_standardization(params: StandardizationParams, ds: Dataset) -> Dataset:
    if ds.d != params.mean.shape[0]:
        raise ValidationError("dimension mismatch between params and dataset")
    feats = (ds.features - params.mean) / params.scale
    return Dataset(feats, ds.labels, ds.n_classes)


def invert_standardization(params: StandardizationParams, ds: Dataset) -> Dataset:
    if ds.d != params.mean.shape[0]:
        raise ValidationError("dimension mismatch between params and dataset")
    feats = ds.features * params.scale + params.mean
    return Dataset(feats, ds.labels, ds.n_classes)


def load_csv(path, label_column: str | None = None) -> Dataset:
    """Load a dataset from a comma-separated file with a header row.

    All columns except ``label_column`` must parse as finite reals.  Label
    values are remapped to contiguous {0, ..., n_c-1} preserving the sorted
    order of the original values.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"empty file: {path}") from None
        header = [h.strip() for h in header]
        label_idx = None
        if label_column is not None:
            if label_column not in header:
                raise ValidationError(
                    f"label column {label_column!r} not in header {header}"
                )
            label_idx = header.index(label_column)

        rows, raw_labels = [], []
        for row_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise CsvFormatError(
                    f"expected {len(header)} fields, got {len(row)}",
                    path=path, row=row_no,
                )
            vals = []
            for col_idx, cell in enumerate(row):
                try:
                    v = float(cell)
                except ValueError:
                    raise CsvFormatError(
                        "cannot parse value " + repr(cell),
                        path=path, row=row_no, column=header[col_idx],
                    ) from None
                if not math.isfinite(v):
                    raise ValidationError(
                        f"non-finite value {cell!r} at {path} "
                        f"row {row_no}, column {header[col_idx]!r}"
                    )
                if col_idx == label_idx:
                    raw_labels.append(v)
                else:
                    vals.append(v)
            rows.append(vals)

    if not rows:
        raise ValidationError(f"no data rows in {path}")
    features = np.asarray(rows, dtype=np.float64)
    if label_idx is None:
        return Dataset(features)
    uniq, labels = np.unique(np.asarray(raw_labels), return_inverse=True)
    return Dataset(features, labels.astype(np.int64), n_classes=len(uniq))


def save_csv(ds: Dataset, path, label_column: str = "label") -> None:
    """Write a dataset as CSV plus a ``<path>.meta.json`` sidecar.

    Values are printed with 17 significant digits so load_csv round-trips
    exactly.
    """
    path = Path(path)
    header = [f"x{i}" for i in range(ds.d)]
    if ds.labels is not None:
        header.append(label_column)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(ds.n):
            row = [f"{v:.17g}" for v in ds.features[i]]
            if ds.labels is not None:
                row.append(str(int(ds.labels[i])))
            writer.writerow(row)
    meta = {"n": ds.n, "d": ds.d, "n_classes": ds.n_classes}
    with open(f"{path}.meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def make_shifted_blobs(
    n_per_class: int,
    n_classes: int,
    d: int,
    shift,
    rotation_angle: float,
    spread: float = 0.23,
    seed: int = 0,
) -> tuple[Dataset, Dataset]:
    """Generate a labeled source/target pair with a controlled shift.

    Source samples are isotropic Gaussian blobs (std = spread) whose class
    means sit on a circle of radius 4 in the first two dimensions.  The
    target is a fresh draw from the same generative model, rotated by
    ``rotation_angle`` in the first two dimensions and translated by
    ``shift``.  Target labels are returned for evaluation only.
    """
    if n_per_class < 1 or n_classes < 1:
        raise ValidationError("n_per_class and n_classes must be >= 1")
    if d < 2:
        raise ValidationError("need d >= 2")
    if spread <= 0:
        raise ValidationError("spread must be positive")
    shift = np.asarray(shift, dtype=np.float64)
    if shift.shape != (d,):
        raise ValidationError(f"shift must have length {d}, got shape {shift.shape}")

    rng = np.random.default_rng(seed)
    angles = 2.0 * np.pi * np.arange(n_classes) / n_classes
    centers = np.zeros((n_classes, d))
    centers[:, 0] = 4.0 * np.cos(angles)
    centers[:, 1] = 4.0 * np.sin(angles)

    n = n_per_class * n_classes
    labels = np.repeat(np.arange(n_classes), n_per_class)

    def draw():
        return centers[labels] + spread * rng.standard_normal((n, d))

    src = draw()
    tgt = draw()
    c, s = np.cos(rotation_angle), np.sin(rotation_angle)
    rot = np.array([[c, -s], [s, c]])
    tgt[:, :2] = tgt[:, :2] @ rot.T
    tgt = tgt + shift

    source = Dataset(src, labels, n_classes=n_classes)
    target = Dataset(tgt, labels.copy(), n_classes=n_classes)
    return source, target
