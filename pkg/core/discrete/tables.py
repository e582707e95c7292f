"""Finite-category conditional probability tables.

Every conditional table is column-stochastic: column j is a distribution over the
row variable given the j-th conditioning value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from loguru import logger

from core.errors import DataError
from core.models.batch import SampleBatch
from core.utils.encoding import categories_of, one_hot

STOCHASTIC_ATOL = 1e-12


def check_stochastic(name: str, table: np.ndarray, atol: float = STOCHASTIC_ATOL) -> np.ndarray:
    """Validate a column-stochastic matrix and return it as a float array."""
    arr = np.atleast_2d(np.asarray(table, dtype=float))
    if arr.ndim != 2:
        raise DataError(f"{name} must be a matrix (got shape {arr.shape})")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
        raise DataError(f"{name} must have finite non-negative entries")
    sums = arr.sum(axis=0)
    if np.any(np.abs(sums - 1.0) > atol):
        raise DataError(f"{name} columns must sum to 1 (got {np.round(sums, 15).tolist()})")
    return arr


def random_stochastic(rng: np.random.Generator, rows: int, cols: int, concentration: float = 1.0) -> np.ndarray:
    """Random column-stochastic rows x cols matrix with Dirichlet columns."""
    table = rng.dirichlet(np.full(rows, concentration), size=cols).T
    return table / table.sum(axis=0, keepdims=True)


@dataclass(frozen=True, eq=False)
class DiscreteModel:
    """Tables for one conditioning point (a concept value c or a covariate value x).

    ``p_u`` has one column per context: the domains z_1..z_k for the multi-domain
    bridge, or the covariate values x for the concept bridge.
    """

    p_w_given_u: np.ndarray
    p_y_given_u: np.ndarray
    p_u: np.ndarray
    p_c_given_u: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "p_w_given_u", check_stochastic("P(W|U)", self.p_w_given_u))
        object.__setattr__(self, "p_y_given_u", check_stochastic("P(Y|U)", self.p_y_given_u))
        object.__setattr__(self, "p_u", check_stochastic("P(U|context)", self.p_u))
        if self.p_c_given_u is not None:
            object.__setattr__(self, "p_c_given_u", check_stochastic("P(C|U)", self.p_c_given_u))
        k_u = self.p_w_given_u.shape[1]
        for name, table in (("P(Y|U)", self.p_y_given_u), ("P(U|context)", self.p_u.T), ("P(C|U)", self.p_c_given_u)):
            if table is not None and table.shape[1] != k_u:
                raise DataError(f"{name} has {table.shape[1]} latent categories; P(W|U) has {k_u}")

    @classmethod
    def random(
        cls,
        rng: np.random.Generator,
        *,
        k_u: int,
        k_w: int,
        k_y: int,
        n_contexts: int,
        k_c: int | None = None,
    ) -> "DiscreteModel":
        return cls(
            p_w_given_u=random_stochastic(rng, k_w, k_u),
            p_y_given_u=random_stochastic(rng, k_y, k_u),
            p_u=random_stochastic(rng, k_u, n_contexts),
            p_c_given_u=None if k_c is None else random_stochastic(rng, k_c, k_u),
        )

    @property
    def k_u(self) -> int:
        return self.p_w_given_u.shape[1]

    @property
    def k_w(self) -> int:
        return self.p_w_given_u.shape[0]

    @property
    def k_y(self) -> int:
        return self.p_y_given_u.shape[0]

    @property
    def n_contexts(self) -> int:
        return self.p_u.shape[1]

    def p_w(self, p_u: np.ndarray | None = None) -> np.ndarray:
        """P(W | context) = P(W|U) P(U | context), one column per context."""
        return self.p_w_given_u @ (self.p_u if p_u is None else np.asarray(p_u, dtype=float))

    def p_y(self, p_u: np.ndarray | None = None) -> np.ndarray:
        """P(Y | context) = P(Y|U) P(U | context)."""
        return self.p_y_given_u @ (self.p_u if p_u is None else np.asarray(p_u, dtype=float))

    def with_contexts(self, p_u: np.ndarray) -> "DiscreteModel":
        return DiscreteModel(self.p_w_given_u, self.p_y_given_u, p_u, self.p_c_given_u)


def empirical_table(
    batch: SampleBatch,
    target: str,
    given: str,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Frequency estimate of P(target | given) from two discrete code columns.

    Returns ``(table, target_categories, given_categories)``; categories in sorted order.
    """
    batch.require(target, given, min_rows=1)
    t_onehot, t_cats = one_hot(batch[target], order="sorted")
    g_cats = categories_of(batch[given], order="sorted")
    g_onehot, _ = one_hot(batch[given], categories=g_cats)
    counts = t_onehot.T @ g_onehot
    table = counts / counts.sum(axis=0, keepdims=True)
    logger.debug("Estimated P({}|{}) from {} rows: {} x {}", target, given, batch.n, *table.shape)
    return table, t_cats, g_cats
