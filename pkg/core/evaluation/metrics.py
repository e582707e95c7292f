"""Scoring functions used by cross-validation and the scenario sweeps."""

from __future__ import annotations

from typing import Literal

import numpy as np
from sklearn.metrics import accuracy_score, mean_squared_error, roc_auc_score

from core.errors import DataError

Metric = Literal["mse", "auroc", "accuracy"]
METRICS: tuple[Metric, ...] = ("mse", "auroc", "accuracy")

# Sign that turns each metric into "larger is better".
DIRECTION: dict[Metric, float] = {"mse": -1.0, "auroc": 1.0, "accuracy": 1.0}


def _pair(preds: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(preds, dtype=float).reshape(-1)
    t = np.asarray(targets, dtype=float).reshape(-1)
    if p.shape != t.shape:
        raise DataError(f"{p.size} predictions for {t.size} targets")
    if p.size == 0:
        raise DataError("cannot score an empty prediction set")
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(t))):
        raise DataError("predictions and targets must be finite")
    return p, t


def auroc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Area under the ROC curve; tied scores count one half."""
    s, y = _pair(scores, labels)
    classes = np.unique(y)
    if not np.all(np.isin(classes, (0.0, 1.0))):
        raise DataError(f"AUROC needs 0/1 labels (got {classes.tolist()})")
    if classes.size < 2:
        raise DataError("AUROC is undefined when only one class is present")
    return float(roc_auc_score(y, s))


def mse(preds: np.ndarray, targets: np.ndarray) -> float:
    p, t = _pair(preds, targets)
    return float(mean_squared_error(t, p))


def accuracy(preds: np.ndarray, targets: np.ndarray) -> float:
    p, t = _pair(preds, targets)
    return float(accuracy_score(t, p))


def threshold(scores: np.ndarray, at: float = 0.5) -> np.ndarray:
    """Binary decisions from scores; a score exactly at the threshold is class 1."""
    return (np.asarray(scores, dtype=float) >= at).astype(float)


def score(metric: Metric, preds: np.ndarray, targets: np.ndarray) -> float:
    """Evaluate ``metric``. For accuracy, non-integral scores are thresholded at 0.5 first."""
    match metric:
        case "mse":
            return mse(preds, targets)
        case "auroc":
            return auroc(preds, targets)
        case "accuracy":
            p = np.asarray(preds, dtype=float)
            if not np.all(p == np.round(p)):
                p = threshold(p)
            return accuracy(p, targets)
    raise DataError(f"unknown metric {metric!r}")


def worst_score(metric: Metric) -> float:
    return float("inf") if DIRECTION[metric] < 0 else float("-inf")


def is_better(metric: Metric, candidate: float, incumbent: float) -> bool:
    """Strict improvement, so ties keep the incumbent."""
    return DIRECTION[metric] * candidate > DIRECTION[metric] * incumbent
