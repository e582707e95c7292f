"""Concept bridge h0(w, c) and its adaptation predictors.

Stage 1 fits mu_{W|c,x} on (W, C, X); stage 2 regresses Y on the plug-in features
phi(c) (x) mu_{W|c,x} over (C, X, Y). At the target, predictions average h0 under
the target joint embedding mu^q_{WC|x}.
"""

from __future__ import annotations

from collections.abc import Sequence
from typing import ClassVar, Literal

import numpy as np

from core.errors import DataError, KernelMismatchError
from core.estimators.base import BaseBridge, build_bridges
from core.estimators.cme import CmeEstimator, CmePattern, fit_cme_w_given_cx
from core.linalg.gram import check_kernels_match, gram
from core.models.batch import SampleBatch
from core.models.kernels import KernelSet, KernelSpec
from core.utils.encoding import one_hot


class BridgeH0(BaseBridge):
    """h0(w, c) = sum_ij alpha_ij k(w1_i, w) k(c2_j, c)."""

    kind: ClassVar[Literal["h0"]] = "h0"
    second_variable: ClassVar[str] = "C"

    @property
    def anchors_c(self) -> np.ndarray:
        return self.anchors_v

    @property
    def c_kernel(self) -> KernelSpec:
        return self.v_kernel


def _stage2_gamma(cme1: CmeEstimator, stage2: SampleBatch) -> np.ndarray:
    stage2.require("C", "X", min_rows=1)
    return cme1.weights(stage2.select("X", "C"))


def fit_h0_from_cme(cme1: CmeEstimator, stage2: SampleBatch, lambda2: float) -> BridgeH0:
    """Stage 2 of the regression bridge on top of a fitted W|c,x embedding."""
    if cme1.pattern != CmePattern.W_GIVEN_CX:
        raise DataError(f"h0 needs a W_given_CX stage-1 embedding (got {cme1.pattern})")
    stage2.require("C", "X", "Y", min_rows=1)
    if stage2.dim("Y") != 1:
        raise DataError(f"regression target Y must be a single column (got {stage2.dim('Y')})")
    (bridge,) = build_bridges(
        BridgeH0,
        gamma=_stage2_gamma(cme1, stage2),
        stage2_anchors=stage2["C"],
        anchors_w=cme1.anchors["W"],
        targets=stage2["Y"][:, 0],
        labels=[None],
        kernels=cme1.kernels,
        lambdas=(cme1.lam, lambda2),
        jitter1=cme1.solver.jitter,
    )
    return bridge


def fit_h0(
    stage1: SampleBatch,
    stage2: SampleBatch,
    kernels: KernelSet,
    lambda1: float,
    lambda2: float,
) -> BridgeH0:
    """Fit h0 from a stage-1 batch (W, C, X) and a stage-2 batch (C, X, Y)."""
    stage1.require("W", "C", "X", min_rows=1)
    stage2.require("C", "X", "Y", min_rows=1)
    return fit_h0_from_cme(fit_cme_w_given_cx(stage1, kernels, lambda1), stage2, lambda2)


def fit_h0_multilabel(
    stage1: SampleBatch,
    stage2: SampleBatch,
    kernels: KernelSet,
    lambda1: float,
    lambda2: float,
) -> list[BridgeH0]:
    """One bridge per class of a categorical Y (sorted class order), sharing one factorization."""
    stage2.require("C", "X", "Y", min_rows=1)
    targets, classes = one_hot(stage2["Y"], order="sorted")
    if classes.size < 2:
        raise DataError(f"classification needs at least 2 classes in stage 2 (got {classes.tolist()})")
    cme1 = fit_cme_w_given_cx(stage1.require("W", "C", "X", min_rows=1), kernels, lambda1)
    return build_bridges(
        BridgeH0,
        gamma=_stage2_gamma(cme1, stage2),
        stage2_anchors=stage2["C"],
        anchors_w=cme1.anchors["W"],
        targets=targets,
        labels=[float(c) for c in classes],
        kernels=kernels,
        lambdas=(lambda1, lambda2),
        jitter1=cme1.solver.jitter,
    )


def h0_inner_with_cme(
    bridge: BridgeH0,
    c: np.ndarray,
    x: np.ndarray,
    stage1_cme: CmeEstimator,
) -> np.ndarray:
    """<h0, phi(c) (x) mu_{W|c,x}> per query row: the source-domain fitted value at (c, x)."""
    if stage1_cme.pattern != CmePattern.W_GIVEN_CX:
        raise DataError(f"need a W_given_CX embedding (got {stage1_cme.pattern})")
    check_kernels_match(bridge.w_kernel, stage1_cme.kernels.get("W"), "stage-1 W")
    if stage1_cme.n_anchors != bridge.n1 or not np.array_equal(stage1_cme.anchors["W"], bridge.anchors_w):
        raise KernelMismatchError("stage-1 embedding was not fit on this bridge's W anchors")
    b = stage1_cme.weights(SampleBatch.from_arrays("query", X=x, C=c))
    phi_c = gram(bridge.c_kernel, bridge.anchors_c, c)
    return np.sum(phi_c * (bridge.alpha.T @ bridge.k_w1 @ b), axis=0)


def _check_target(bridge: BridgeH0, target_cme: CmeEstimator) -> None:
    if target_cme.pattern != CmePattern.WC_JOINT_GIVEN_X:
        raise DataError(f"full adaptation needs a WC_joint_given_X embedding (got {target_cme.pattern})")
    check_kernels_match(bridge.w_kernel, target_cme.kernels.get("W"), "target W")
    check_kernels_match(bridge.c_kernel, target_cme.kernels.get("C"), "target C")


def predict_full_adaptation(bridge: BridgeH0, target_cme: CmeEstimator, x_new: np.ndarray) -> np.ndarray:
    """y(x) = sum_t omega_t(x) h0(w^q_t, c^q_t), omega the target joint-embedding weights."""
    _check_target(bridge, target_cme)
    omega = target_cme.weights(SampleBatch.from_arrays("query", X=x_new))
    return _h0_at_target_anchors(bridge, target_cme) @ omega


def _h0_at_target_anchors(bridge: BridgeH0, target_cme: CmeEstimator) -> np.ndarray:
    return bridge.evaluate(target_cme.anchors["W"], target_cme.anchors["C"])


def predict_scores(bridges: Sequence[BridgeH0], target_cme: CmeEstimator, x_new: np.ndarray) -> np.ndarray:
    """k x m matrix of per-label scores; the target weights are computed once."""
    if not bridges:
        raise DataError("no bridges to score")
    for bridge in bridges:
        _check_target(bridge, target_cme)
    omega = target_cme.weights(SampleBatch.from_arrays("query", X=x_new))
    return np.stack([_h0_at_target_anchors(b, target_cme) @ omega for b in bridges])


def classify(bridges: Sequence[BridgeH0], target_cme: CmeEstimator, x_new: np.ndarray) -> np.ndarray:
    """Index of the highest-scoring label per query row; ties go to the lowest index."""
    if len(bridges) < 2:
        raise DataError(f"classification needs at least 2 bridges (got {len(bridges)})")
    return np.argmax(predict_scores(bridges, target_cme, x_new), axis=0)
