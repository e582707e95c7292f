"""Kernel ridge baselines: ERM, Cat-ERM, Avg-ERM, COVARS, LABELS and the KRR ORACLE.

All of them are sklearn ``KernelRidge`` fits on a precomputed Gram matrix, with
alpha = lambda * n so the penalty matches the bridge estimators. Row weights enter
as W^{1/2} K W^{1/2} (sklearn's ``sample_weight``), normalized to mean one.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Protocol

import numpy as np
from loguru import logger
from sklearn.kernel_ridge import KernelRidge

from core.errors import DataError
from core.evaluation.weights import covariate_shift_weights, label_shift_weights
from core.linalg.gram import gram
from core.models.batch import SampleBatch
from core.models.kernels import KernelSpec


class Predictor(Protocol):
    def predict(self, x: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True, eq=False)
class KrrPredictor:
    kernel: KernelSpec
    anchors: np.ndarray
    model: KernelRidge
    lam: float

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.model.predict(gram(self.kernel, x, self.anchors))


@dataclass(frozen=True, eq=False)
class AveragedPredictor:
    """Mean of member predictions (Avg-ERM)."""

    members: tuple[Predictor, ...]

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.mean([m.predict(x) for m in self.members], axis=0)


def _check_weights(weights: np.ndarray | None, n: int) -> np.ndarray | None:
    if weights is None:
        return None
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape[0] != n:
        raise DataError(f"{w.shape[0]} weights for {n} rows")
    if not np.all(np.isfinite(w)) or np.any(w < 0.0):
        raise DataError("weights must be finite and non-negative")
    total = float(w.sum())
    if total <= 0.0:
        raise DataError("weights are all zero")
    return w * (n / total)


def baseline_krr(
    train: SampleBatch,
    kernel: KernelSpec,
    lam: float,
    weights: np.ndarray | None = None,
) -> KrrPredictor:
    """Weighted kernel ridge regression of Y on X; unweighted when ``weights`` is None."""
    train.require("X", "Y", min_rows=1)
    if not np.isfinite(lam) or lam <= 0.0:
        raise DataError(f"lambda must be positive (got {lam})")
    w = _check_weights(weights, train.n)
    y = train["Y"][:, 0] if train.dim("Y") == 1 else train["Y"]
    model = KernelRidge(alpha=lam * train.n, kernel="precomputed")
    model.fit(gram(kernel, train["X"]), y, sample_weight=w)
    return KrrPredictor(kernel=kernel, anchors=train["X"], model=model, lam=lam)


def fit_erm(train: SampleBatch, kernel: KernelSpec, lam: float) -> KrrPredictor:
    """ERM on one batch; on pooled source domains this is Cat-ERM, on target data the ORACLE."""
    return baseline_krr(train, kernel, lam)


def fit_avg_erm(domains: Sequence[SampleBatch], kernel: KernelSpec, lam: float) -> AveragedPredictor:
    """One KRR per source domain; predictions averaged."""
    if not domains:
        raise DataError("Avg-ERM needs at least one source domain")
    return AveragedPredictor(members=tuple(baseline_krr(d, kernel, lam) for d in domains))


def fit_avg_erm_pooled(train: SampleBatch, kernel: KernelSpec, lam: float) -> AveragedPredictor:
    """Avg-ERM from a pooled batch split on its Z column."""
    return fit_avg_erm([part for _, part in train.domains()], kernel, lam)


def fit_covars(train: SampleBatch, target_x: np.ndarray, kernel: KernelSpec, lam: float) -> KrrPredictor:
    """KRR weighted by the covariate density ratio toward ``target_x``."""
    weights = covariate_shift_weights(train["X"], target_x)
    logger.debug("COVARS weights: median {:.3g} max {:.3g}", float(np.median(weights)), float(weights.max()))
    return baseline_krr(train, kernel, lam, weights)


def fit_labels(train: SampleBatch, target_y: np.ndarray, kernel: KernelSpec, lam: float) -> KrrPredictor:
    """KRR weighted by the label ratio q(y) / p(y) (oracle access to target labels)."""
    weights = label_shift_weights(train["Y"], target_y)
    return baseline_krr(train, kernel, lam, weights)
