"""Importance weights for the COVARS and LABELS baselines.

Covariate shift: a logistic domain classifier on raw features plus bias gives
w(x) = p(target | x) / p(source | x) * n_source / n_target.
Label shift: q(y) / p(y) from class frequencies, or from Gaussian kernel density
estimates for continuous labels. All weights are clipped to [1e-3, 1e3].
"""

from __future__ import annotations

import warnings

import numpy as np
from loguru import logger
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression
from sklearn.neighbors import KernelDensity

from core.errors import DataError
from core.linalg.gram import median_heuristic

WEIGHT_CLIP = (1e-3, 1e3)
DOMAIN_L2_PENALTY = 1e-4
DOMAIN_MAX_ITER = 100
MAX_LABEL_CATEGORIES = 32


def _block(name: str, values: np.ndarray) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape[0] == 0:
        raise DataError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    return arr


def clip_weights(weights: np.ndarray) -> np.ndarray:
    return np.clip(weights, *WEIGHT_CLIP)


def covariate_shift_weights(
    source_x: np.ndarray,
    target_x: np.ndarray,
    *,
    l2_penalty: float = DOMAIN_L2_PENALTY,
    max_iter: int = DOMAIN_MAX_ITER,
) -> np.ndarray:
    """Per-source-row density-ratio weights from a logistic source-vs-target classifier."""
    xs, xt = _block("source X", source_x), _block("target X", target_x)
    if xs.shape[1] != xt.shape[1]:
        raise DataError(f"source X has {xs.shape[1]} columns, target X has {xt.shape[1]}")
    features = np.vstack([xs, xt])
    domain = np.r_[np.zeros(xs.shape[0]), np.ones(xt.shape[0])]
    if np.all(features == features[0]):
        # Identical points carry no domain signal.
        return clip_weights(np.ones(xs.shape[0]))
    n = features.shape[0]
    # penalty on the mean log-loss: C = 1 / (l2_penalty * n)
    clf = LogisticRegression(C=1.0 / (l2_penalty * n), solver="newton-cg", max_iter=max_iter)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        clf.fit(features, domain)
    if any(issubclass(w.category, ConvergenceWarning) for w in caught):
        logger.warning("Domain classifier did not converge in {} iterations", max_iter)
    log_odds = clf.decision_function(xs)
    ratio = np.exp(np.clip(log_odds, -50.0, 50.0)) * xs.shape[0] / xt.shape[0]
    return clip_weights(ratio)


def _is_discrete(*labels: np.ndarray) -> bool:
    values = np.concatenate([np.ravel(v) for v in labels])
    return bool(np.all(values == np.round(values))) and np.unique(values).size <= MAX_LABEL_CATEGORIES


def label_shift_weights(
    source_y: np.ndarray,
    target_y: np.ndarray,
    *,
    discrete: bool | None = None,
) -> np.ndarray:
    """Per-source-row q(y) / p(y).

    ``discrete=None`` treats integer-valued labels with at most 32 distinct values
    as classes and anything else as continuous.
    """
    ys = _block("source Y", source_y)
    yt = _block("target Y", target_y)
    if ys.shape[1] != 1 or yt.shape[1] != 1:
        raise DataError("label-shift weights need a single label column")
    ys, yt = ys[:, 0], yt[:, 0]
    if discrete is None:
        discrete = _is_discrete(ys, yt)
    if discrete:
        return clip_weights(_frequency_ratio(ys, yt))
    return clip_weights(_density_ratio(ys, yt))


def _frequency_ratio(ys: np.ndarray, yt: np.ndarray) -> np.ndarray:
    classes, counts = np.unique(ys, return_counts=True)
    missing = np.setdiff1d(np.unique(yt), classes)
    if missing.size:
        raise DataError(f"target classes {missing.tolist()} never occur in the source")
    p = counts / ys.size
    q = np.array([np.mean(yt == c) for c in classes])
    ratio = q / p
    return ratio[np.searchsorted(classes, ys)]


def _density_ratio(ys: np.ndarray, yt: np.ndarray) -> np.ndarray:
    pooled = np.r_[ys, yt]
    bandwidth = median_heuristic(pooled) if pooled.size >= 2 else 1.0
    kde_p = KernelDensity(kernel="gaussian", bandwidth=bandwidth).fit(ys[:, None])
    kde_q = KernelDensity(kernel="gaussian", bandwidth=bandwidth).fit(yt[:, None])
    log_ratio = kde_q.score_samples(ys[:, None]) - kde_p.score_samples(ys[:, None])
    logger.debug("Label density ratio with bandwidth {:.4g}", bandwidth)
    return np.exp(np.clip(log_ratio, -50.0, 50.0))
