"""Experiment orchestration: run adaptation methods end to end.

A config names a task (synthetic blobs or CSV pair), a method from the
closed list, a downstream classifier, and the seeds/knobs.  Reports are
deterministic functions of the config; wall-clock timing is only
recorded when explicitly requested so that result files stay
byte-identical across runs.
"""

from __future__ import annotations

import json
import os
import tempfile
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .adaptation import (
    adapt_map,
    adapt_sample,
    adapt_transport,
    mixture_plan,
    transfer_component_labels,
)
from .baselines import otda_empirical, otda_linear
from .classify import accuracy, parse_classifier_spec, train_classifier
from .data import Dataset, load_csv, make_shifted_blobs
from .errors import ValidationError
from .gmm import em_fit, label_components

METHODS = (
    "source-only",
    "otda-emd",
    "otda-sinkhorn",
    "otda-linear",
    "gmm-otda-m",
    "gmm-otda-e",
    "gmm-otda-t",
)

RESULTS_HEADER = "task,method,accuracy,seed,wall_ms,K_src,K_tgt,classifier"

_WALL_MS_OFF = -1.0


@contextmanager
def _stage(name: str):
    """Attach the pipeline stage name to any escaping error."""
    try:
        yield
    except Exception as exc:
        raise type(exc)(f"{name}: {exc}") from exc


@dataclass(frozen=True)
class TaskSpec:
    """Where one task's source/target data comes from.

    Exactly one of `synthetic` (kwargs for make_shifted_blobs) or the
    CSV pair must be given.  Target labels, when present, are held back
    for scoring only.
    """

    name: str
    synthetic: dict | None = None
    src_csv: str | None = None
    tgt_csv: str | None = None
    label_column: str = "label"

    def __post_init__(self):
        if not self.name:
            raise ValidationError("task name must be non-empty")
        has_syn = self.synthetic is not None
        has_csv = self.src_csv is not None and self.tgt_csv is not None
        if has_syn == has_csv:
            raise ValidationError(
                f"task {self.name!r} needs either synthetic params or a CSV pair"
            )

    @classmethod
    def from_dict(cls, d: dict) -> "TaskSpec":
        known = {"name", "synthetic", "src_csv", "tgt_csv", "label_column"}
        extra = set(d) - known
        if extra:
            raise ValidationError(f"unknown task fields: {sorted(extra)}")
        return cls(**d)


@dataclass(frozen=True)
class ExperimentConfig:
    task: TaskSpec
    method: str
    k_src: int = 3
    k_tgt: int = 3
    classifier: str = "knn(1)"
    seed: int = 0
    epsilon: float | None = None
    subsample: int = 2000
    allow_large: bool = False
    record_timing: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(
                f"unknown method {self.method!r}; choose one of {', '.join(METHODS)}"
            )
        parse_classifier_spec(self.classifier)
        if self.k_src < 1 or self.k_tgt < 1:
            raise ValidationError("component counts must be >= 1")
        if self.subsample < 1:
            raise ValidationError("subsample cap must be >= 1")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValidationError("epsilon must be positive")


@dataclass(frozen=True)
class ExperimentReport:
    task: str
    method: str
    accuracy: float
    seed: int
    wall_ms: float
    k_src: int
    k_tgt: int
    classifier: str
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.accuracy <= 1.0):
            raise ValidationError(f"accuracy {self.accuracy} outside [0, 1]")

    def to_json_dict(self) -> dict:
        return {
            "schema": 1,
            "task": self.task,
            "method": self.method,
            "accuracy": self.accuracy,
            "seed": self.seed,
            "wall_ms": self.wall_ms,
            "K_src": self.k_src,
            "K_tgt": self.k_tgt,
            "classifier": self.classifier,
            "diagnostics": self.diagnostics,
        }

    def csv_row(self) -> str:
        return (
            f"{self.task},{self.method},{self.accuracy:.12g},{self.seed},"
            f"{self.wall_ms:.12g},{self.k_src},{self.k_tgt},{self.classifier}"
        )


def write_text_atomic(path, text: str) -> None:
    """Write via a temp file in the same directory plus rename."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_task(task: TaskSpec, seed: int) -> tuple[Dataset, Dataset]:
    """Materialize a task's source and target datasets."""
    if task.synthetic is not None:
        if "seed" in task.synthetic:
            raise ValidationError(
                "task synthetic params must not carry a seed; the experiment "
                "seed is used"
            )
        return make_shifted_blobs(**task.synthetic, seed=seed)
    src = load_csv(task.src_csv, label_column=task.label_column)
    tgt = load_csv(task.tgt_csv, label_column=task.label_column)
    if src.labels is None:
        raise ValidationError(f"task {task.name!r}: source CSV has no labels")
    return src, tgt


def _subsample(X: np.ndarray, labels, cap: int, rng) -> tuple[np.ndarray, object]:
    n = X.shape[0]
    if n <= cap:
        return X, labels
    idx = np.sort(rng.choice(n, size=cap, replace=False))
    return X[idx], None if labels is None else labels[idx]


def _fit_domain_gmm(data: Dataset, K: int, seed: int):
    if data.labels is not None and K < data.n_classes:
        warnings.warn(
            f"K={K} below the {data.n_classes} classes; components will mix classes",
            RuntimeWarning,
            stacklevel=2,
        )
    gmm, _ = em_fit(data.without_labels(), K, seed=seed)
    return gmm


def run_method(config: ExperimentConfig, src: Dataset, tgt_features: np.ndarray):
    """Run one adaptation method; target labels are never seen here.

    Returns an AdaptationResult carrying either predicted target labels
    (strategy M) or transported labeled points (everything else).  The
    "source-only" pseudo-method is handled by run_experiment directly.
    """
    method = config.method
    if method in ("otda-emd", "otda-sinkhorn"):
        with _stage("adapt"):
            rng = np.random.default_rng([config.seed, 101])
            Xs, ys = _subsample(src.features, src.labels, config.subsample, rng)
            Xt, _ = _subsample(tgt_features, None, config.subsample, rng)
            solver = "exact" if method == "otda-emd" else "sinkhorn"
            return otda_empirical(
                Xs,
                ys,
                Xt,
                solver=solver,
                epsilon=config.epsilon,
                allow_large=config.allow_large,
            )
    if method == "otda-linear":
        with _stage("adapt"):
            return otda_linear(src.features, src.labels, tgt_features)
    if method not in ("gmm-otda-m", "gmm-otda-e", "gmm-otda-t"):
        raise ValidationError(f"{method!r} is not an adaptation method")
    with _stage("fit-gmm"):
        src_gmm = _fit_domain_gmm(src, config.k_src, config.seed)
        src_gmm = label_components(src_gmm, src)
        tgt_gmm = _fit_domain_gmm(Dataset(tgt_features), config.k_tgt, config.seed)
    with _stage("plan"):
        plan = mixture_plan(src_gmm, tgt_gmm)
        tgt_labeled = transfer_component_labels(plan, src_gmm)
    with _stage("adapt"):
        if method == "gmm-otda-m":
            return adapt_map(tgt_labeled, tgt_features, plan=plan)
        if method == "gmm-otda-e":
            return adapt_sample(tgt_labeled, n=tgt_features.shape[0],
                                seed=config.seed, plan=plan)
        return adapt_transport(plan, src_gmm, src.features, src.labels)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Execute one (task, method) cell and score it on the target.

    Target labels never reach the adaptation method; they are consumed
    only by the final accuracy computation.
    """
    with _stage("load"):
        src, tgt = load_task(config.task, config.seed)
        if tgt.labels is None:
            raise ValidationError("target labels are required for scoring")
        tgt_features = tgt.without_labels().features

    t0 = time.perf_counter()
    if config.method == "source-only":
        with _stage("train"):
            clf = train_classifier(src.features, src.labels, config.classifier)
        with _stage("predict"):
            pred = clf.predict(tgt_features)
        diagnostics = {"strategy": "source-only"}
    else:
        result = run_method(config, src, tgt_features)
        if result.predicted_labels is not None:
            pred = result.predicted_labels
        else:
            with _stage("train"):
                pts = result.transported_points
                clf = train_classifier(pts.features, pts.labels, config.classifier)
            with _stage("predict"):
                pred = clf.predict(tgt_features)
        diagnostics = result.diagnostics

    with _stage("score"):
        acc = accuracy(pred, tgt.labels)
    wall = (time.perf_counter() - t0) * 1000.0
    report = ExperimentReport(
        task=config.task.name,
        method=config.method,
        accuracy=acc,
        seed=config.seed,
        wall_ms=round(wall, 3) if config.record_timing else _WALL_MS_OFF,
        k_src=config.k_src,
        k_tgt=config.k_tgt,
        classifier=config.classifier,
        diagnostics=diagnostics,
    )
    return report


def parse_grid(grid: dict) -> list[ExperimentConfig]:
    """Expand a grid description into one config per (task, method)."""
    known = {
        "schema",
        "seed",
        "classifier",
        "record_timing",
        "k_src",
        "k_tgt",
        "epsilon",
        "subsample",
        "allow_large",
        "methods",
        "tasks",
    }
    extra = set(grid) - known
    if extra:
        raise ValidationError(f"unknown grid fields: {sorted(extra)}")
    methods = grid.get("methods")
    tasks = grid.get("tasks")
    if not methods or not tasks:
        raise ValidationError("grid needs non-empty 'methods' and 'tasks'")
    shared = dict(
        k_src=grid.get("k_src", 3),
        k_tgt=grid.get("k_tgt", 3),
        classifier=grid.get("classifier", "knn(1)"),
        seed=grid.get("seed", 0),
        epsilon=grid.get("epsilon"),
        subsample=grid.get("subsample", 2000),
        allow_large=grid.get("allow_large", False),
        record_timing=grid.get("record_timing", False),
    )
    configs = []
    for task_dict in tasks:
        task = TaskSpec.from_dict(task_dict)
        for method in methods:
            configs.append(ExperimentConfig(task=task, method=method, **shared))
    return configs


def run_grid(grid: dict, out_dir, jobs: int = 1) -> list[ExperimentReport]:
    """Run every grid cell and write results.csv, reports/, summary.json.

    Cells may run concurrently (`jobs` > 1); outputs are written in grid
    order afterwards, so files do not depend on scheduling.
    """
    configs = parse_grid(grid)
    if jobs < 1:
        raise ValidationError("jobs must be >= 1")
    if jobs == 1:
        reports = [run_experiment(c) for c in configs]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(run_experiment, configs))

    out_dir = os.fspath(out_dir)
    reports_dir = os.path.join(out_dir, "reports")
    os.makedirs(reports_dir, exist_ok=True)

    lines = [RESULTS_HEADER] + [r.csv_row() for r in reports]
    write_text_atomic(os.path.join(out_dir, "results.csv"), "\n".join(lines) + "\n")

    for report in reports:
        name = f"{report.task}__{report.method}.json"
        payload = json.dumps(report.to_json_dict(), indent=2, sort_keys=True)
        write_text_atomic(os.path.join(reports_dir, name), payload + "\n")

    by_method: dict[str, list[float]] = {}
    for report in reports:
        by_method.setdefault(report.method, []).append(report.accuracy)
    summary = {
        "schema": 1,
        "n_tasks": len({r.task for r in reports}),
        "methods": sorted(by_method),
        "mean_accuracy": {
            m: float(np.mean(accs)) for m, accs in sorted(by_method.items())
        },
    }
    write_text_atomic(
        os.path.join(out_dir, "summary.json"),
        json.dumps(summary, indent=2, sort_keys=True) + "\n",
    )
    return reports
