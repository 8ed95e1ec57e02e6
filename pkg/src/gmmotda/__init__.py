"""Domain adaptation via optimal transport between Gaussian mixtures."""

__version__ = "0.1.0"

from .adaptation import (
    AdaptationResult,
    MixturePlan,
    adapt_map,
    adapt_sample,
    adapt_transport,
    mixture_plan,
    mw2_distance,
    transfer_component_labels,
)
from .baselines import otda_empirical, otda_linear
from .classify import KnnClassifier, LogisticRegression, accuracy, train_classifier
from .data import (
    Dataset,
    StandardizationParams,
    apply_standardization,
    invert_standardization,
    load_csv,
    make_shifted_blobs,
    save_csv,
    standardize,
)
from .errors import CsvFormatError, ValidationError
from .gaussians import (
    AffineMap,
    DiagGaussian,
    FullGaussian,
    fit_full_gaussian,
    jacobi_eigh,
    monge_map_diag,
    monge_map_full,
    pairwise_w2_diag_sq,
    sym_sqrt,
    w2_diag,
    w2_full,
)
from .gmm import (
    Gmm,
    bic,
    em_fit,
    kmeans_pp_init,
    label_components,
    load_gmm,
    log_likelihood,
    responsibilities,
    sample,
    save_gmm,
)
from .solvers import (
    TransportPlan,
    barycentric_map,
    solve_exact,
    solve_sinkhorn,
    squared_euclidean_cost,
    uniform_histogram,
    w2_empirical,
)
from .experiment import (
    METHODS,
    ExperimentConfig,
    ExperimentReport,
    TaskSpec,
    run_experiment,
    run_grid,
)
from .plots import emit_plot_data, pca_top2

__all__ = [
    "AdaptationResult",
    "AffineMap",
    "CsvFormatError",
    "Dataset",
    "DiagGaussian",
    "ExperimentConfig",
    "ExperimentReport",
    "FullGaussian",
    "Gmm",
    "KnnClassifier",
    "LogisticRegression",
    "METHODS",
    "MixturePlan",
    "StandardizationParams",
    "TaskSpec",
    "TransportPlan",
    "accuracy",
    "adapt_map",
    "adapt_sample",
    "adapt_transport",
    "apply_standardization",
    "barycentric_map",
    "bic",
    "em_fit",
    "emit_plot_data",
    "fit_full_gaussian",
    "invert_standardization",
    "jacobi_eigh",
    "kmeans_pp_init",
    "label_components",
    "load_csv",
    "load_gmm",
    "log_likelihood",
    "make_shifted_blobs",
    "mixture_plan",
    "monge_map_diag",
    "monge_map_full",
    "mw2_distance",
    "otda_empirical",
    "otda_linear",
    "pairwise_w2_diag_sq",
    "pca_top2",
    "responsibilities",
    "run_experiment",
    "run_grid",
    "sample",
    "save_csv",
    "save_gmm",
    "solve_exact",
    "solve_sinkhorn",
    "squared_euclidean_cost",
    "standardize",
    "sym_sqrt",
    "train_classifier",
    "transfer_component_labels",
    "uniform_histogram",
    "w2_diag",
    "w2_empirical",
    "w2_full",
]
