"""Shared stage-2 algebra and the fitted-bridge contract.

Both bridges solve the same ridge problem. With stage-1 weights Gamma (n1 x n2),
anchor proxies W1 and stage-2 anchors V2 (concepts C for h0, covariates X for m0):

    Sigma = (Gamma^T K_W1 Gamma) * K_V2
    u     = (Sigma + lambda2 * n2 * I)^{-1} y2
    alpha = Gamma * u[None, :]          # vec(alpha) = (I kr Gamma) u

All solves stay in the n2-dimensional u-space; nothing of size n1*n2 x n1*n2 is built.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field

from core.errors import DataError
from core.linalg.gram import gram
from core.linalg.solve import RidgeSolver
from core.models.kernels import KernelSet, KernelSpec


class BridgeSummary(BaseModel):
    """Fit report for one bridge (one label)."""

    kind: Literal["h0", "m0"] = Field(..., description="Bridge family")
    n_stage1: int = Field(..., ge=1, description="Stage-1 anchor rows (n1 or n3)")
    n_stage2: int = Field(..., ge=1, description="Stage-2 rows (n2 or n4)")
    lambda_stage1: float = Field(..., gt=0.0)
    lambda_stage2: float = Field(..., gt=0.0)
    label: float | None = Field(None, description="Class value for one-hot bridges, None for regression")
    norm_squared: float = Field(..., ge=0.0, description="RKHS norm of the fitted bridge, trace form")
    jitter_stage1: float = Field(0.0, ge=0.0)
    jitter_stage2: float = Field(0.0, ge=0.0)


@dataclass(frozen=True, eq=False)
class Stage2Solution:
    """Factorized Sigma system plus u for one or more label columns."""

    sigma: np.ndarray
    solver: RidgeSolver
    u: np.ndarray  # n2 x k


def solve_stage2(
    gamma: np.ndarray,
    k_w1: np.ndarray,
    k_v2: np.ndarray,
    targets: np.ndarray,
    lam2: float,
    *,
    label: str,
) -> Stage2Solution:
    """Factorize Sigma + lambda2 n2 I once and solve for every target column."""
    if not np.isfinite(lam2) or lam2 <= 0.0:
        raise DataError(f"lambda must be positive (got {lam2})")
    y = np.asarray(targets, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    n2 = gamma.shape[1]
    if y.shape[0] != n2:
        raise DataError(f"{y.shape[0]} stage-2 targets for {n2} stage-2 rows")
    sigma = (gamma.T @ k_w1 @ gamma) * k_v2
    solver = RidgeSolver.factorize(sigma, lam2 * n2, label=label)
    return Stage2Solution(sigma=sigma, solver=solver, u=solver.solve(y))


@dataclass(frozen=True, eq=False)
class BaseBridge(ABC):
    """Fitted bridge h(w, v) = sum_ij alpha_ij k(w1_i, w) k(v2_j, v).

    Implementations define:
    - kind: "h0" (v = concept C) or "m0" (v = covariate X).
    - second_variable: the variable name of the stage-2 anchors.
    """

    alpha: np.ndarray
    gamma: np.ndarray
    u: np.ndarray
    anchors_w: np.ndarray
    anchors_v: np.ndarray
    y: np.ndarray
    kernels: KernelSet
    lambdas: tuple[float, float]
    jitter: tuple[float, float] = (0.0, 0.0)
    label: float | None = None

    @property
    @abstractmethod
    def kind(self) -> Literal["h0", "m0"]:
        """Bridge family."""
        ...

    @property
    @abstractmethod
    def second_variable(self) -> str:
        """Variable of the stage-2 anchors ("C" or "X")."""
        ...

    @property
    def w_kernel(self) -> KernelSpec:
        return self.kernels.get("W")

    @property
    def v_kernel(self) -> KernelSpec:
        return self.kernels.get(self.second_variable)

    @property
    def n1(self) -> int:
        return self.alpha.shape[0]

    @property
    def n2(self) -> int:
        return self.alpha.shape[1]

    @cached_property
    def k_w1(self) -> np.ndarray:
        return gram(self.w_kernel, self.anchors_w)

    @cached_property
    def k_v2(self) -> np.ndarray:
        return gram(self.v_kernel, self.anchors_v)

    def norm_squared(self) -> float:
        """||h||^2 = trace(alpha^T K_W1 alpha K_V2)."""
        return float(np.sum(self.alpha * (self.k_w1 @ self.alpha @ self.k_v2)))

    def evaluate(self, w: np.ndarray, v: np.ndarray) -> np.ndarray:
        """h(w_t, v_t) for matched query rows."""
        phi_w = gram(self.w_kernel, self.anchors_w, w)
        phi_v = gram(self.v_kernel, self.anchors_v, v)
        if phi_w.shape[1] != phi_v.shape[1]:
            raise DataError(f"{phi_w.shape[1]} W rows but {phi_v.shape[1]} {self.second_variable} rows")
        return np.sum(phi_w * (self.alpha @ phi_v), axis=0)

    def summary(self) -> BridgeSummary:
        return BridgeSummary(
            kind=self.kind,
            n_stage1=self.n1,
            n_stage2=self.n2,
            lambda_stage1=self.lambdas[0],
            lambda_stage2=self.lambdas[1],
            label=self.label,
            norm_squared=max(self.norm_squared(), 0.0),
            jitter_stage1=self.jitter[0],
            jitter_stage2=self.jitter[1],
        )


def build_bridges(
    cls: type[BaseBridge],
    *,
    gamma: np.ndarray,
    stage2_anchors: np.ndarray,
    anchors_w: np.ndarray,
    targets: np.ndarray,
    labels: list[float | None],
    kernels: KernelSet,
    lambdas: tuple[float, float],
    jitter1: float,
) -> list[BaseBridge]:
    """Run the shared stage-2 solve and wrap one bridge per target column."""
    v_kernel = kernels.get(cls.second_variable)
    k_w1 = gram(kernels.get("W"), anchors_w)
    k_v2 = gram(v_kernel, stage2_anchors)
    y = np.asarray(targets, dtype=float).reshape(gamma.shape[1], -1)
    sol = solve_stage2(gamma, k_w1, k_v2, y, lambdas[1], label=f"{cls.kind} stage 2")
    bridges = []
    for col, label in enumerate(labels):
        u = sol.u[:, col]
        bridge = cls(
            alpha=gamma * u[None, :],
            gamma=gamma,
            u=u,
            anchors_w=anchors_w,
            anchors_v=stage2_anchors,
            y=y[:, col],
            kernels=kernels,
            lambdas=lambdas,
            jitter=(jitter1, sol.solver.jitter),
            label=label,
        )
        bridges.append(bridge)
    logger.info(
        "Fitted {} bridge(s) kind={} n1={} n2={} lambdas=({:g}, {:g})",
        len(bridges),
        cls.kind,
        gamma.shape[0],
        gamma.shape[1],
        *lambdas,
    )
    return bridges
