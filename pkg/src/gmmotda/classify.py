"""Downstream classifiers and the accuracy metric.

Deliberately small: a k-NN classifier with deterministic tie-breaking
and a full-batch multinomial logistic regression.  Both are evaluation
plumbing, not contributions, so they favor determinism over speed.
"""

from __future__ import annotations

import re

import numpy as np

from .errors import ValidationError
from .solvers import squared_euclidean_cost


def _check_training_set(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValidationError("training features must be a non-empty 2-D array")
    if y.shape != (X.shape[0],):
        raise ValidationError("training labels do not match features")
    if not np.issubdtype(y.dtype, np.integer):
        raise ValidationError("training labels must be integers")
    if np.any(y < 0):
        raise ValidationError("training labels must be nonnegative")
    return X, y.astype(np.int64)


class KnnClassifier:
    """k nearest neighbors with majority vote.

    Equal distances resolve to the lowest training index; vote ties
    resolve to the lowest class label, so predictions are deterministic.
    """

    def __init__(self, k: int = 1):
        if k < 1:
            raise ValidationError("k must be at least 1")
        self.k = int(k)
        self._X = None
        self._y = None
        self._n_classes = 0

    def fit(self, X, y):
        X, y = _check_training_set(X, y)
        if self.k > X.shape[0]:
            raise ValidationError(
                f"k={self.k} exceeds the {X.shape[0]} training samples"
            )
        self._X = X
        self._y = y
        self._n_classes = int(y.max()) + 1
        return self

    def predict(self, X):
        if self._X is None:
            raise ValidationError("classifier is not fitted")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self._X.shape[1]:
            raise ValidationError("query points do not match training dimension")
        D = squared_euclidean_cost(X, self._X)
        order = np.argsort(D, axis=1, kind="stable")[:, : self.k]
        votes = self._y[order]
        out = np.empty(X.shape[0], dtype=np.int64)
        for i in range(X.shape[0]):
            counts = np.bincount(votes[i], minlength=self._n_classes)
            out[i] = int(np.argmax(counts))
        return out


class LogisticRegression:
    """Multinomial logistic regression by full-batch gradient descent.

    Runs a fixed 500 steps at step size 0.1 on internally standardized
    features, with L2 weight 1e-4 on the weights (bias excluded).
    """

    N_STEPS = 500
    STEP_SIZE = 0.1
    L2 = 1e-4

    def __init__(self):
        self._mean = None
        self._scale = None
        self._W = None
        self._b = None

    def fit(self, X, y):
        X, y = _check_training_set(X, y)
        n, d = X.shape
        n_classes = int(y.max()) + 1
        self._mean = X.mean(axis=0)
        self._scale = np.maximum(X.std(axis=0), 1e-12)
        Z = (X - self._mean) / self._scale
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), y] = 1.0
        W = np.zeros((d, n_classes))
        b = np.zeros(n_classes)
        for _ in range(self.N_STEPS):
            logits = Z @ W + b
            logits -= logits.max(axis=1, keepdims=True)
            expl = np.exp(logits)
            proba = expl / expl.sum(axis=1, keepdims=True)
            err = (proba - onehot) / n
            W -= self.STEP_SIZE * (Z.T @ err + self.L2 * W)
            b -= self.STEP_SIZE * err.sum(axis=0)
        self._W = W
        self._b = b
        return self

    def predict(self, X):
        if self._W is None:
            raise ValidationError("classifier is not fitted")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self._W.shape[0]:
            raise ValidationError("query points do not match training dimension")
        Z = (X - self._mean) / self._scale
        logits = Z @ self._W + self._b
        return np.argmax(logits, axis=1).astype(np.int64)


_KNN_RE = re.compile(r"^knn(?:\((\d+)\))?$")


def parse_classifier_spec(spec: str):
    """Validate a classifier name: "knn", "knn(<k>)" or "logreg"."""
    m = _KNN_RE.match(spec)
    if m:
        return ("knn", int(m.group(1)) if m.group(1) else 1)
    if spec == "logreg":
        return ("logreg", None)
    raise ValidationError(
        f"unknown classifier {spec!r}; choose knn, knn(<k>) or logreg"
    )


def train_classifier(X, y, spec: str = "knn(1)"):
    """Build and fit the classifier named by `spec`."""
    kind, k = parse_classifier_spec(spec)
    if kind == "knn":
        return KnnClassifier(k=k).fit(X, y)
    return LogisticRegression().fit(X, y)


def accuracy(pred: np.ndarray, truth: np.ndarray) -> float:
    """Fraction of positions where pred equals truth."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1 or pred.size == 0:
        raise ValidationError("prediction/truth must be matching non-empty vectors")
    return float(np.mean(pred == truth))
