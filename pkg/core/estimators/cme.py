"""Conditional mean embeddings (stage-1 regressions).

A fitted CME keeps its anchor rows and the Cholesky factor of
(K_cond + lambda * n * I), where K_cond is the Hadamard product of the Gram
matrices of the conditioning variables. ``weights(query)`` returns
b(query) = (K_cond + lambda * n * I)^{-1} Phi_cond(query), one column per query row,
so the embedding of the query is sum_i b_i(query) phi(anchor_i).
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from loguru import logger

from core.errors import DataError
from core.linalg.gram import gram
from core.linalg.solve import RidgeSolver
from core.models.batch import SampleBatch
from core.models.kernels import KernelSet


class CmePattern(StrEnum):
    W_GIVEN_CX = "W_given_CX"
    W_GIVEN_X = "W_given_X"
    W_GIVEN_X_PER_DOMAIN = "W_given_X_perDomain"
    W_GIVEN_XZ = "W_given_XZ"
    WC_JOINT_GIVEN_X = "WC_joint_given_X"


CONDITIONING: dict[CmePattern, tuple[str, ...]] = {
    CmePattern.W_GIVEN_CX: ("X", "C"),
    CmePattern.W_GIVEN_X: ("X",),
    CmePattern.W_GIVEN_X_PER_DOMAIN: ("X",),
    CmePattern.W_GIVEN_XZ: ("X", "Z"),
    CmePattern.WC_JOINT_GIVEN_X: ("X",),
}

EMBEDDED: dict[CmePattern, tuple[str, ...]] = {
    CmePattern.W_GIVEN_CX: ("W",),
    CmePattern.W_GIVEN_X: ("W",),
    CmePattern.W_GIVEN_X_PER_DOMAIN: ("W",),
    CmePattern.W_GIVEN_XZ: ("W",),
    CmePattern.WC_JOINT_GIVEN_X: ("W", "C"),
}

Query = SampleBatch | Mapping[str, np.ndarray]


def as_query(query: Query) -> SampleBatch:
    return query if isinstance(query, SampleBatch) else SampleBatch(dict(query), name="query")


def conditioning_gram(
    kernels: KernelSet,
    variables: Sequence[str],
    rows: SampleBatch,
    cols: SampleBatch | None = None,
) -> np.ndarray:
    """Hadamard product of per-variable Grams, rows x cols."""
    cols = rows if cols is None else cols
    out = np.ones((rows.n, cols.n))
    for var in variables:
        out = out * gram(kernels.get(var), rows[var], cols[var])
    return out


@dataclass(frozen=True, eq=False)
class CmeEstimator:
    """Fitted conditional mean embedding in weight form."""

    pattern: CmePattern
    anchors: SampleBatch
    kernels: KernelSet
    lam: float
    solver: RidgeSolver
    domain: int | None = None

    @property
    def n_anchors(self) -> int:
        return self.anchors.n

    @property
    def conditioning(self) -> tuple[str, ...]:
        return CONDITIONING[self.pattern]

    @property
    def embedded(self) -> tuple[str, ...]:
        return EMBEDDED[self.pattern]

    def weights(self, query: Query) -> np.ndarray:
        """b(query): n_anchors x n_query weight matrix."""
        q = as_query(query).require(*self.conditioning, min_rows=0)
        for var in self.conditioning:
            if q.dim(var) != self.anchors.dim(var):
                raise DataError(
                    f"query {var} has {q.dim(var)} columns; estimator was fit on {self.anchors.dim(var)}"
                )
        return self.solver.solve(conditioning_gram(self.kernels, self.conditioning, self.anchors, q))


def _fit(
    pattern: CmePattern,
    batch: SampleBatch,
    kernels: KernelSet,
    lam: float,
    domain: int | None = None,
) -> CmeEstimator:
    if not np.isfinite(lam) or lam <= 0.0:
        raise DataError(f"lambda must be positive (got {lam})")
    variables = EMBEDDED[pattern] + CONDITIONING[pattern]
    batch.require(*variables, min_rows=1)
    for var in variables:
        kernels.get(var)
    anchors = batch.select(*variables)
    k_cond = conditioning_gram(kernels, CONDITIONING[pattern], anchors)
    label = f"cme[{pattern}]" if domain is None else f"cme[{pattern}, z={domain}]"
    solver = RidgeSolver.factorize(k_cond, lam * anchors.n, label=label)
    logger.info("Fitted {} n={} lambda={:g} jitter={:.1e}", label, anchors.n, lam, solver.jitter)
    return CmeEstimator(pattern=pattern, anchors=anchors, kernels=kernels, lam=lam, solver=solver, domain=domain)


def fit_cme_w_given_cx(batch: SampleBatch, kernels: KernelSet, lam: float) -> CmeEstimator:
    """mu_{W|c,x}: weights (K_X * K_C + lambda n I)^{-1}(Phi_X(x) * Phi_C(c))."""
    return _fit(CmePattern.W_GIVEN_CX, batch, kernels, lam)


def fit_cme_w_given_x(batch: SampleBatch, kernels: KernelSet, lam: float) -> CmeEstimator:
    """mu_{W|x}: weights (K_X + lambda n I)^{-1} Phi_X(x)."""
    return _fit(CmePattern.W_GIVEN_X, batch, kernels, lam)


def fit_cme_w_given_xz(batch: SampleBatch, kernels: KernelSet, lam: float) -> CmeEstimator:
    """mu_{W|x,z} pooled over domains; with a Binary kernel on Z this is the per-domain fit in one solve."""
    return _fit(CmePattern.W_GIVEN_XZ, batch, kernels, lam)


def fit_cme_joint_wc_given_x(batch: SampleBatch, kernels: KernelSet, lam: float) -> CmeEstimator:
    """mu_{WC|x} kept as weights over (W, C) anchor pairs; never materialized as a tensor."""
    return _fit(CmePattern.WC_JOINT_GIVEN_X, batch, kernels, lam)


def fit_cme_per_domain(
    batches: Sequence[SampleBatch],
    kernels: KernelSet,
    lam: float | Sequence[float],
    domains: Sequence[int] | None = None,
) -> list[CmeEstimator]:
    """One mu_{W|x} per domain, each fit only on that domain's rows.

    ``lam`` is a single value or one value per domain.
    """
    domains = list(range(len(batches))) if domains is None else list(domains)
    if len(domains) != len(batches):
        raise DataError(f"{len(batches)} domain batches but {len(domains)} domain ids")
    lams = [float(lam)] * len(batches) if np.isscalar(lam) else [float(v) for v in lam]
    if len(lams) != len(batches):
        raise DataError(f"{len(batches)} domain batches but {len(lams)} lambdas")
    estimators = []
    for r, batch, lam_r in zip(domains, batches, lams):
        if batch.n == 0:
            raise DataError(f"domain {r} is empty")
        estimators.append(_fit(CmePattern.W_GIVEN_X_PER_DOMAIN, batch, kernels, lam_r, domain=r))
    return estimators


@dataclass(frozen=True, eq=False)
class PerDomainCme:
    """Per-domain mu_{W|x,z} stitched back onto the pooled anchor order.

    Each domain r is regularized with lambda * n / n_r, which makes the weights
    identical to the pooled ``W_given_XZ`` fit under a Binary Z kernel. Queries
    from a domain with no anchors get all-zero weights, as in the pooled fit.
    """

    anchors: SampleBatch
    kernels: KernelSet
    lam: float
    estimators: tuple[CmeEstimator, ...]
    row_index: tuple[np.ndarray, ...]

    @classmethod
    def fit(cls, batch: SampleBatch, kernels: KernelSet, lam: float) -> "PerDomainCme":
        batch.require("W", "X", "Z", min_rows=1)
        codes = batch["Z"][:, 0]
        domains = [int(code) for code in np.unique(codes)]
        rows = tuple(np.flatnonzero(codes == code) for code in np.unique(codes))
        parts = [batch.take(idx) for idx in rows]
        lams = [lam * batch.n / idx.size for idx in rows]
        estimators = fit_cme_per_domain(parts, kernels, lams, domains=domains)
        return cls(
            anchors=batch.select("W", "X", "Z"),
            kernels=kernels,
            lam=lam,
            estimators=tuple(estimators),
            row_index=rows,
        )

    @property
    def n_anchors(self) -> int:
        return self.anchors.n

    @property
    def solver_jitter(self) -> float:
        return max(est.solver.jitter for est in self.estimators)

    def weights(self, query: Query) -> np.ndarray:
        q = as_query(query).require("X", "Z", min_rows=0)
        codes = q["Z"][:, 0]
        out = np.zeros((self.n_anchors, q.n))
        for est, idx in zip(self.estimators, self.row_index):
            cols = np.flatnonzero(codes == est.domain)
            if cols.size:
                out[np.ix_(idx, cols)] = est.weights(q.take(cols))
        return out
