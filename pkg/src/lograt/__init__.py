"""Curvature-based ranking of element log-ratios along a geochemical transect."""

from .curvature import (
    CurvatureProfile,
    EvaluationGrid,
    LogRatioCurve,
    c_value,
    crossing_set,
    curvature,
    detect_intervals,
    log_ratio_curve,
    numeric_derivatives,
    pair_profile,
    threshold,
)
from .gam import (
    GaussianFamily,
    SmoothFit,
    TweedieFamily,
    fit_pirls,
    predict,
    select_lambda_gcv,
    tweedie_deviance,
)
from .ingest import (
    TransectDataset,
    build_dataset,
    compute_outlier_weights,
    normalize_positions,
    parse_table,
    project_to_transect,
)
from .pipeline import ModelSettings, analyze
from .ranking import (
    CValueMatrix,
    accumulate,
    build_matrix,
    element_frequency,
    scale_matrix,
    top_curves,
    top_k,
)
from .spline import build_basis, eval_basis, penalty_matrix
from .synth import Anomaly, SyntheticSpec, generate

__version__ = "0.1.0"
