"""Gram matrices, feature-map evaluations and kernel defaults.

``gram(kernel, rows, cols)`` returns the n_rows x n_cols matrix [k(row_i, col_j)].
Evaluating the feature map of anchors at a query set, Phi_V(v'), is the same call
with the anchors as rows, so query vectors are always columns.
"""

from __future__ import annotations

from collections.abc import Mapping
from typing import Literal, TypeAlias

import numpy as np
from loguru import logger
from scipy.spatial.distance import cdist, pdist

from core.errors import DataError, KernelMismatchError
from core.models.batch import SampleBatch
from core.models.kernels import (
    BinaryKernel,
    ColumnwiseProductKernel,
    GaussianKernel,
    KernelSet,
    KernelSpec,
)

GramMatrix: TypeAlias = np.ndarray

KernelKind = Literal["gaussian", "binary", "columnwise_gaussian", "columnwise_binary"]

MEDIAN_HEURISTIC_CAP = 1000

DEFAULT_KINDS: dict[str, KernelKind] = {
    "X": "gaussian",
    "W": "gaussian",
    "C": "gaussian",
    "Z": "binary",
}

# Per-scenario overrides of DEFAULT_KINDS: binary concepts, per-column scales on multi-domain X.
SCENARIO_KINDS: dict[str, dict[str, KernelKind]] = {
    "concept_classification": {"C": "columnwise_binary"},
    "multidomain_classification": {"X": "columnwise_gaussian"},
    "regression_bernoulli": {"X": "columnwise_gaussian"},
    "regression_beta": {"X": "columnwise_gaussian"},
}


def default_kinds(scenario: str | None = None) -> dict[str, KernelKind]:
    """Kernel kind per variable for ``scenario``; unknown or ``None`` scenarios get DEFAULT_KINDS."""
    return {**DEFAULT_KINDS, **SCENARIO_KINDS.get(scenario or "", {})}


def _as_points(values: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DataError(f"{what} must be a 2-D block (got ndim={arr.ndim})")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{what} contains non-finite values")
    return arr


def gram(kernel: KernelSpec, rows: np.ndarray, cols: np.ndarray | None = None) -> GramMatrix:
    """Kernel matrix between two column blocks; ``cols=None`` gives the self-Gram."""
    a = _as_points(rows, "rows")
    b = a if cols is None else _as_points(cols, "cols")
    if a.shape[1] != b.shape[1]:
        raise DataError(f"dimension mismatch: rows have {a.shape[1]} columns, cols have {b.shape[1]}")
    if a.shape[1] == 0:
        raise DataError("cannot evaluate a kernel on zero-column blocks")
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]))

    match kernel:
        case GaussianKernel(length_scale=scale):
            sq = cdist(a, b, metric="sqeuclidean")
            return np.exp(-sq / (2.0 * scale * scale))
        case BinaryKernel():
            return (cdist(a, b, metric="hamming") == 0.0).astype(float)
        case ColumnwiseProductKernel(kernels=parts):
            if len(parts) != a.shape[1]:
                raise DataError(
                    f"columnwise kernel has {len(parts)} factors for a {a.shape[1]}-column block"
                )
            out = np.ones((a.shape[0], b.shape[0]))
            for j, part in enumerate(parts):
                out *= gram(part, a[:, [j]], b[:, [j]])
            return out
    raise DataError(f"unsupported kernel {kernel!r}")


def median_heuristic(block: np.ndarray, *, seed: int = 0, cap: int = MEDIAN_HEURISTIC_CAP) -> float:
    """Median pairwise Euclidean distance over at most ``cap`` rows (seeded subsample).

    Returns 1.0 when every point coincides.
    """
    points = _as_points(block, "block")
    if points.shape[0] < 2:
        raise DataError(f"median heuristic needs at least 2 rows (got {points.shape[0]})")
    if points.shape[0] > cap:
        rng = np.random.Generator(np.random.Philox(seed))
        points = points[np.sort(rng.choice(points.shape[0], size=cap, replace=False))]
    median = float(np.median(pdist(points, metric="euclidean")))
    return median if median > 0.0 else 1.0


def default_kernel(
    kind: KernelKind,
    block: np.ndarray,
    *,
    length_scale: float | None = None,
    seed: int = 0,
) -> KernelSpec:
    """Kernel of ``kind`` for ``block``; unset Gaussian scales come from the median heuristic."""
    points = _as_points(block, "block")
    if kind == "binary":
        return BinaryKernel()
    if kind == "columnwise_binary":
        return ColumnwiseProductKernel.repeat(BinaryKernel(), points.shape[1])
    if kind == "gaussian":
        scale = length_scale if length_scale is not None else median_heuristic(points, seed=seed)
        return GaussianKernel(length_scale=scale)
    if kind == "columnwise_gaussian":
        return ColumnwiseProductKernel(
            kernels=tuple(
                GaussianKernel(
                    length_scale=length_scale
                    if length_scale is not None
                    else median_heuristic(points[:, [j]], seed=seed)
                )
                for j in range(points.shape[1])
            )
        )
    raise DataError(f"unknown kernel kind {kind!r}")


def with_length_scale(kernel: KernelSpec, length_scale: float) -> KernelSpec:
    """``kernel`` with every Gaussian factor set to ``length_scale``; binary factors unchanged."""
    match kernel:
        case GaussianKernel():
            return GaussianKernel(length_scale=length_scale)
        case ColumnwiseProductKernel(kernels=parts):
            return ColumnwiseProductKernel(kernels=tuple(with_length_scale(p, length_scale) for p in parts))
    return kernel


def resolve_kernels(
    batch: SampleBatch,
    kernels: KernelSet | None = None,
    *,
    kinds: Mapping[str, KernelKind] | None = None,
    length_scales: Mapping[str, float] | None = None,
    scenario: str | None = None,
    seed: int = 0,
) -> KernelSet:
    """Fill every unset kernel for the variables present in ``batch``.

    Kinds come from ``kinds``, then the defaults for ``scenario``. Explicit
    entries in ``kernels`` are kept as-is.
    """
    kernels = kernels or KernelSet()
    chosen = {**default_kinds(scenario), **{k.upper(): v for k, v in (kinds or {}).items()}}
    scales = {k.upper(): v for k, v in (length_scales or {}).items()}
    filled: dict[str, KernelSpec] = {}
    for var in ("X", "W", "C", "Z"):
        if getattr(kernels, var.lower()) is not None or not batch.has(var):
            continue
        spec = default_kernel(chosen[var], batch[var], length_scale=scales.get(var), seed=seed)
        logger.debug("Resolved kernel for {}: {}", var, spec)
        filled[var.lower()] = spec
    return kernels.model_copy(update=filled) if filled else kernels


def check_kernels_match(expected: KernelSpec, actual: KernelSpec, what: str) -> None:
    """Raise KernelMismatchError unless two fitted components share a kernel."""
    if expected != actual:
        raise KernelMismatchError(f"{what}: kernel {actual!r} does not match {expected!r}")


def kernels_match(a: KernelSet, b: KernelSet, variables: tuple[str, ...] = ("X", "W", "C", "Z")) -> bool:
    """True when both sets agree on every listed variable that both define."""
    for var in variables:
        ka, kb = getattr(a, var.lower()), getattr(b, var.lower())
        if ka is not None and kb is not None and ka != kb:
            return False
    return True
