"""Matrix bridges for finite categories.

A bridge matrix M maps proxy distributions to outcome distributions:
P(Y | context) = M P(W | context) for every training context. It is computed as
P(Y|.) pinv(P(W|.)) with singular values below 1e-10 * sigma_max dropped. The
training residual and the numerical rank are reported with every bridge; low rank
is logged, never raised.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from loguru import logger

from core.errors import DataError

PINV_RCOND = 1e-10
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class BridgeMatrix:
    values: np.ndarray
    context: str
    residual: float
    rank: int
    n_columns: int

    def transfer(self, p_w: np.ndarray) -> np.ndarray:
        """Predicted P(Y | new context) = M P(W | new context)."""
        return self.values @ np.asarray(p_w, dtype=float)


def _as_table(name: str, table: np.ndarray) -> np.ndarray:
    arr = np.asarray(table, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or not np.all(np.isfinite(arr)):
        raise DataError(f"{name} must be a finite matrix (got shape {arr.shape})")
    return arr


def _bridge(target: np.ndarray, source: np.ndarray, context: str, target_name: str, source_name: str) -> BridgeMatrix:
    t = _as_table(target_name, target)
    s = _as_table(source_name, source)
    if t.shape[1] != s.shape[1]:
        raise DataError(f"{target_name} has {t.shape[1]} columns but {source_name} has {s.shape[1]}")
    values = t @ np.linalg.pinv(s, rcond=PINV_RCOND)
    residual = float(np.linalg.norm(t - values @ s, ord="fro"))
    rank = int(np.linalg.matrix_rank(s, tol=PINV_RCOND * max(np.linalg.norm(s, ord=2), np.finfo(float).tiny)))
    if residual > RESIDUAL_TOL:
        logger.warning(
            "Bridge {} for {}: rank({})={} of {} columns, residual {:.3e}",
            target_name,
            context,
            source_name,
            rank,
            s.shape[1],
            residual,
        )
    else:
        logger.debug("Bridge {} for {}: rank {} of {} columns", target_name, context, rank, s.shape[1])
    return BridgeMatrix(values=values, context=context, residual=residual, rank=rank, n_columns=s.shape[1])


def bridge_matrix_concept(
    p_y_given_x_c: np.ndarray,
    p_w_given_x_c: np.ndarray,
    context: str = "c",
) -> BridgeMatrix:
    """H0(Y, W, c) with P(Y|X, c) = H0 P(W|X, c); columns index the covariate values x."""
    return _bridge(p_y_given_x_c, p_w_given_x_c, context, "P(Y|X,c)", "P(W|X,c)")


def bridge_matrix_multidomain(
    p_y_given_x_perdomain: np.ndarray,
    p_w_given_x_perdomain: np.ndarray,
    context: str = "x",
) -> BridgeMatrix:
    """M_{w,x} = P_{1:k_Z}(Y|x) pinv(P_{1:k_Z}(W|x)); columns index the source domains."""
    return _bridge(p_y_given_x_perdomain, p_w_given_x_perdomain, context, "P(Y|x,z)", "P(W|x,z)")


def bridge_matrix_concept_marginal(
    p_c_given_u_x: np.ndarray,
    p_w_given_u: np.ndarray,
    context: str = "x",
) -> BridgeMatrix:
    """M0(C, W, x) = P(C|U, x) pinv(P(W|U)) with P(W|U) supplied."""
    return _bridge(p_c_given_u_x, p_w_given_u, context, "P(C|U,x)", "P(W|U)")


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))))


def non_identification_witness(
    p_y_train: np.ndarray,
    p_w_train: np.ndarray,
    p_w_heldout: np.ndarray,
    tv: float = 0.1,
) -> tuple[BridgeMatrix, BridgeMatrix]:
    """Two bridges that fit a single training domain exactly yet disagree on a held-out one.

    M2 = M1 + v n^T with n orthogonal to the training proxy column and v summing to
    zero, scaled so the held-out predictions differ by ``tv`` in total variation.
    """
    m1 = bridge_matrix_multidomain(p_y_train, p_w_train, context="single domain")
    p = _as_table("P(W|x,z)", p_w_train)
    if p.shape[1] != 1:
        raise DataError(f"witness construction needs exactly one training domain (got {p.shape[1]})")
    if m1.values.shape[0] < 2:
        raise DataError("witness construction needs at least 2 outcome categories")
    p = p[:, 0]
    held = np.asarray(p_w_heldout, dtype=float).reshape(-1)
    n = held - (held @ p) / (p @ p) * p
    shift = float(n @ held)
    if abs(shift) < 1e-12:
        raise DataError("held-out proxy distribution is collinear with the training one")
    v = np.zeros(m1.values.shape[0])
    v[0], v[1] = 1.0, -1.0
    # held-out difference is v * (n . held); its TV is |scale * shift|
    scale = tv / abs(shift)
    values = m1.values + scale * np.outer(v, n)
    m2 = BridgeMatrix(
        values=values,
        context="single domain (alternative)",
        residual=float(np.linalg.norm(_as_table("P(Y|x,z)", p_y_train) - values @ p[:, None])),
        rank=m1.rank,
        n_columns=1,
    )
    return m1, m2
