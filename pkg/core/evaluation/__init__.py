"""Metrics, cross-validation, kernel ridge baselines and scenario sweeps."""

from core.evaluation.baselines import (
    AveragedPredictor,
    KrrPredictor,
    baseline_krr,
    fit_avg_erm,
    fit_covars,
    fit_erm,
    fit_labels,
)
from core.evaluation.cv import CvPlan, CvResult, cross_validate, fold_indices, select
from core.evaluation.metrics import METRICS, Metric, accuracy, auroc, mse, score
from core.evaluation.scenario import RESULT_COLUMNS, Method, run_scenario, summarize
from core.evaluation.weights import covariate_shift_weights, label_shift_weights

__all__ = [
    "METRICS",
    "RESULT_COLUMNS",
    "AveragedPredictor",
    "CvPlan",
    "CvResult",
    "KrrPredictor",
    "Method",
    "Metric",
    "accuracy",
    "auroc",
    "baseline_krr",
    "covariate_shift_weights",
    "cross_validate",
    "fit_avg_erm",
    "fit_covars",
    "fit_erm",
    "fit_labels",
    "fold_indices",
    "label_shift_weights",
    "mse",
    "run_scenario",
    "score",
    "select",
    "summarize",
]
