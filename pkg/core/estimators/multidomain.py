"""Multi-domain bridge m0(w, x), its target predictor, and the double-CME
operator used for partial adaptation when target concepts are unobserved.

m0 is the concept bridge with C replaced by X and X replaced by the domain
variable Z: stage 1 embeds W given (x, z), stage 2 regresses Y on
phi(x) (x) mu_{W|x,z}.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import ClassVar, Literal

import numpy as np
from loguru import logger

from core.errors import DataError
from core.estimators.base import BaseBridge, build_bridges
from core.estimators.cme import (
    CmeEstimator,
    CmePattern,
    PerDomainCme,
    fit_cme_w_given_x,
    fit_cme_w_given_xz,
)
from core.estimators.concept import BridgeH0
from core.linalg.gram import check_kernels_match, gram
from core.linalg.solve import RidgeSolver
from core.models.batch import SampleBatch
from core.models.kernels import BinaryKernel, KernelSet
from core.utils.encoding import one_hot

# Above this many domains the pooled Binary-kernel solve is used instead of per-domain blocks.
MAX_PER_DOMAIN_CATEGORIES = 64


class BridgeM0(BaseBridge):
    """m0(w, x) = sum_ij alpha_ij k(w3_i, w) k(x4_j, x)."""

    kind: ClassVar[Literal["m0"]] = "m0"
    second_variable: ClassVar[str] = "X"

    @property
    def anchors_x(self) -> np.ndarray:
        return self.anchors_v


def _use_per_domain(stage1: SampleBatch, kernels: KernelSet, per_domain: bool | None) -> bool:
    if per_domain is not None:
        if per_domain and not isinstance(kernels.get("Z"), BinaryKernel):
            raise DataError("per-domain stage 1 needs a Binary kernel on Z")
        return per_domain
    if not isinstance(kernels.get("Z"), BinaryKernel) or stage1.dim("Z") != 1:
        return False
    return np.unique(stage1["Z"][:, 0]).size <= MAX_PER_DOMAIN_CATEGORIES


def fit_stage1_m0(
    stage1: SampleBatch,
    kernels: KernelSet,
    lambda3: float,
    per_domain: bool | None = None,
) -> CmeEstimator | PerDomainCme:
    """mu_{W|x,z}: per-domain blocks for a categorical domain index, else one pooled solve."""
    stage1.require("W", "X", "Z", min_rows=1)
    if _use_per_domain(stage1, kernels, per_domain):
        return PerDomainCme.fit(stage1, kernels, lambda3)
    return fit_cme_w_given_xz(stage1, kernels, lambda3)


def _bridges_from_cme(
    cme3: CmeEstimator | PerDomainCme,
    stage2: SampleBatch,
    lambda4: float,
    targets: np.ndarray,
    labels: list[float | None],
) -> list[BridgeM0]:
    jitter = cme3.solver_jitter if isinstance(cme3, PerDomainCme) else cme3.solver.jitter
    return build_bridges(
        BridgeM0,
        gamma=cme3.weights(stage2.select("X", "Z")),
        stage2_anchors=stage2["X"],
        anchors_w=cme3.anchors["W"],
        targets=targets,
        labels=labels,
        kernels=cme3.kernels,
        lambdas=(cme3.lam, lambda4),
        jitter1=jitter,
    )


def _fit_m0(
    stage1: SampleBatch,
    stage2: SampleBatch,
    kernels: KernelSet,
    lambda3: float,
    lambda4: float,
    targets: np.ndarray,
    labels: list[float | None],
    per_domain: bool | None,
) -> list[BridgeM0]:
    cme3 = fit_stage1_m0(stage1, kernels, lambda3, per_domain)
    return _bridges_from_cme(cme3, stage2, lambda4, targets, labels)


def fit_m0_from_cme(cme3: CmeEstimator | PerDomainCme, stage2: SampleBatch, lambda4: float) -> BridgeM0:
    """Stage 2 of m0 on top of a fitted W|x,z embedding (pooled or per-domain)."""
    if isinstance(cme3, CmeEstimator) and cme3.pattern != CmePattern.W_GIVEN_XZ:
        raise DataError(f"m0 needs a W_given_XZ stage-1 embedding (got {cme3.pattern})")
    stage2.require("X", "Y", "Z", min_rows=1)
    if stage2.dim("Y") != 1:
        raise DataError(f"regression target Y must be a single column (got {stage2.dim('Y')})")
    (bridge,) = _bridges_from_cme(cme3, stage2, lambda4, stage2["Y"][:, 0], [None])
    return bridge


def m0_inner_with_cme(
    bridge: BridgeM0,
    x: np.ndarray,
    z: np.ndarray,
    stage1_cme: CmeEstimator | PerDomainCme,
) -> np.ndarray:
    """<m0, phi(x) (x) mu_{W|x,z}> per query row: the source-domain fitted value at (x, z)."""
    check_kernels_match(bridge.w_kernel, stage1_cme.kernels.get("W"), "stage-1 W")
    if stage1_cme.n_anchors != bridge.n1 or not np.array_equal(stage1_cme.anchors["W"], bridge.anchors_w):
        raise DataError("stage-1 embedding was not fit on this bridge's W anchors")
    b = stage1_cme.weights(SampleBatch.from_arrays("query", X=x, Z=z))
    phi_x = gram(bridge.v_kernel, bridge.anchors_x, x)
    return np.sum(phi_x * (bridge.alpha.T @ bridge.k_w1 @ b), axis=0)


def fit_m0(
    stage1: SampleBatch,
    stage2: SampleBatch,
    kernels: KernelSet,
    lambda3: float,
    lambda4: float,
    *,
    per_domain: bool | None = None,
) -> BridgeM0:
    """Fit m0 from stage-1 (W, X, Z) and stage-2 (X, Y, Z) batches pooled over source domains.

    ``per_domain=None`` picks the per-domain path for a Binary-kernel domain index
    with at most 64 categories.
    """
    stage2.require("X", "Y", "Z", min_rows=1)
    if stage2.dim("Y") != 1:
        raise DataError(f"regression target Y must be a single column (got {stage2.dim('Y')})")
    (bridge,) = _fit_m0(stage1, stage2, kernels, lambda3, lambda4, stage2["Y"][:, 0], [None], per_domain)
    return bridge


def fit_m0_multilabel(
    stage1: SampleBatch,
    stage2: SampleBatch,
    kernels: KernelSet,
    lambda3: float,
    lambda4: float,
    *,
    per_domain: bool | None = None,
) -> list[BridgeM0]:
    """One m0 per class of a categorical Y (sorted class order)."""
    stage2.require("X", "Y", "Z", min_rows=1)
    targets, classes = one_hot(stage2["Y"], order="sorted")
    if classes.size < 2:
        raise DataError(f"classification needs at least 2 classes in stage 2 (got {classes.tolist()})")
    return _fit_m0(
        stage1, stage2, kernels, lambda3, lambda4, targets, [float(c) for c in classes], per_domain
    )


def _check_target(bridge: BridgeM0, target_cme: CmeEstimator) -> None:
    if target_cme.pattern not in (CmePattern.W_GIVEN_X, CmePattern.W_GIVEN_X_PER_DOMAIN):
        raise DataError(f"multi-domain prediction needs a W_given_X embedding (got {target_cme.pattern})")
    check_kernels_match(bridge.w_kernel, target_cme.kernels.get("W"), "target W")
    check_kernels_match(bridge.v_kernel, target_cme.kernels.get("X"), "target X")


def _predict(bridge: BridgeM0, target_cme: CmeEstimator, x_new: np.ndarray, omega: np.ndarray) -> np.ndarray:
    k_wq = gram(bridge.w_kernel, bridge.anchors_w, target_cme.anchors["W"])
    phi_x = gram(bridge.v_kernel, bridge.anchors_x, x_new)
    return np.sum(omega * (k_wq.T @ bridge.alpha @ phi_x), axis=0)


def predict_multidomain(bridge: BridgeM0, target_cme: CmeEstimator, x_new: np.ndarray) -> np.ndarray:
    """y(x) = <m0, mu^q_{W|x} (x) phi(x)>."""
    _check_target(bridge, target_cme)
    omega = target_cme.weights(SampleBatch.from_arrays("query", X=x_new))
    return _predict(bridge, target_cme, x_new, omega)


def predict_scores_multidomain(
    bridges: Sequence[BridgeM0], target_cme: CmeEstimator, x_new: np.ndarray
) -> np.ndarray:
    if not bridges:
        raise DataError("no bridges to score")
    for bridge in bridges:
        _check_target(bridge, target_cme)
    omega = target_cme.weights(SampleBatch.from_arrays("query", X=x_new))
    return np.stack([_predict(b, target_cme, x_new, omega) for b in bridges])


def classify_multidomain(
    bridges: Sequence[BridgeM0], target_cme: CmeEstimator, x_new: np.ndarray
) -> np.ndarray:
    """Argmax over per-label scores; ties go to the lowest index."""
    if len(bridges) < 2:
        raise DataError(f"classification needs at least 2 bridges (got {len(bridges)})")
    return np.argmax(predict_scores_multidomain(bridges, target_cme, x_new), axis=0)


# --- Double CME (partial adaptation) ---


@dataclass(frozen=True, eq=False)
class DoubleCmeOperator:
    """Estimated map from phi(x) (x) mu_{W|x} to a concept embedding over stage-2 C anchors.

    K~ = K_X4 * (D4^T K_W3 D4) with D4 = (K_X3 + lambda3 n3 I)^{-1} K_X34.
    For a query (x, nu) the concept embedding is sum_j beta_j phi(c4_j) with
    beta = (K~ + lambda4 n4 I)^{-1} [Phi_X4(x) * (D4^T <phi(W3), nu>)].
    """

    cme3: CmeEstimator
    anchors_x: np.ndarray
    anchors_c: np.ndarray
    d4: np.ndarray
    k_tilde: np.ndarray
    solver: RidgeSolver
    kernels: KernelSet
    lambdas: tuple[float, float]

    @property
    def n4(self) -> int:
        return self.anchors_c.shape[0]

    def concept_weights(
        self, target_cme: CmeEstimator, x_new: np.ndarray, omega: np.ndarray | None = None
    ) -> np.ndarray:
        """beta: n4 x m coefficients of the estimated concept embedding at each query x."""
        check_kernels_match(self.kernels.get("W"), target_cme.kernels.get("W"), "target W")
        check_kernels_match(self.kernels.get("X"), target_cme.kernels.get("X"), "target X")
        if omega is None:
            omega = target_cme.weights(SampleBatch.from_arrays("query", X=x_new))
        k_w3q = gram(self.kernels.get("W"), self.cme3.anchors["W"], target_cme.anchors["W"])
        inner = self.d4.T @ (k_w3q @ omega)
        phi_x = gram(self.kernels.get("X"), self.anchors_x, x_new)
        return self.solver.solve(phi_x * inner)


def fit_double_cme(
    stage1: SampleBatch,
    stage2: SampleBatch,
    kernels: KernelSet,
    lambda3: float,
    lambda4: float,
) -> DoubleCmeOperator:
    """Fit the concept-embedding operator from stage-1 (W, X) and stage-2 (C, X) batches."""
    stage2.require("C", "X", min_rows=1)
    kernels.get("C")  # raises if unset
    if not np.isfinite(lambda4) or lambda4 <= 0.0:
        raise DataError(f"lambda must be positive (got {lambda4})")
    cme3 = fit_cme_w_given_x(stage1.require("W", "X", min_rows=1), kernels, lambda3)
    d4 = cme3.weights(stage2.select("X"))
    k_w3 = gram(kernels.get("W"), cme3.anchors["W"])
    k_x4 = gram(kernels.get("X"), stage2["X"])
    k_tilde = k_x4 * (d4.T @ k_w3 @ d4)
    solver = RidgeSolver.factorize(k_tilde, lambda4 * stage2.n, label="double cme")
    logger.info(
        "Fitted double CME n3={} n4={} lambdas=({:g}, {:g}) jitter={:.1e}",
        cme3.n_anchors,
        stage2.n,
        lambda3,
        lambda4,
        solver.jitter,
    )
    return DoubleCmeOperator(
        cme3=cme3,
        anchors_x=stage2["X"],
        anchors_c=stage2["C"],
        d4=d4,
        k_tilde=k_tilde,
        solver=solver,
        kernels=kernels,
        lambdas=(lambda3, lambda4),
    )


def predict_partial_adaptation(
    bridge: BridgeH0,
    op: DoubleCmeOperator,
    target_cme: CmeEstimator,
    x_new: np.ndarray,
) -> np.ndarray:
    """y(x) = <h0, A[mu^q_{W|x} (x) phi(x)] (x) mu^q_{W|x}> without target concepts."""
    if target_cme.pattern != CmePattern.W_GIVEN_X:
        raise DataError(f"partial adaptation needs a W_given_X target embedding (got {target_cme.pattern})")
    check_kernels_match(bridge.w_kernel, target_cme.kernels.get("W"), "target W")
    check_kernels_match(bridge.c_kernel, op.kernels.get("C"), "double CME C")
    omega = target_cme.weights(SampleBatch.from_arrays("query", X=x_new))
    beta = op.concept_weights(target_cme, x_new, omega)
    k_w = gram(bridge.w_kernel, bridge.anchors_w, target_cme.anchors["W"]) @ omega
    k_c = gram(bridge.c_kernel, bridge.anchors_c, op.anchors_c) @ beta
    return np.sum(k_w * (bridge.alpha @ k_c), axis=0)
