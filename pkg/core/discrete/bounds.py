"""Partial-identification intervals for E_q[Y | x] when the target joint of (W, C)
is not identified.

Binary W and C: only the marginals pi_W = q(W=1|x) and pi_C = q(C=1|x) are known,
so q11 = q(W=1, C=1|x) ranges over the Frechet-Hoeffding interval
[max(0, pi_C + pi_W - 1), min(pi_C, pi_W)] and

    E = h[0,0](1 - pi_C - pi_W) + h[1,0] pi_W + h[0,1] pi_C
        + q11 (h[0,0] - h[1,0] - h[0,1] + h[1,1])

with the bridge table indexed h[w, c].

Gaussian-linear: with h0(w, c) = w^T H c and cross-correlation R of norm <= rho,
E = mu_w^T H mu_c + tr(Htilde^T R), Htilde = Sigma_W^{1/2} H Sigma_C^{1/2}, so the
interval half-width is rho * (sum of singular values of Htilde).
"""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import linalg

from core.errors import DataError

DEGENERATE_TOL = 1e-12


class _Interval(BaseModel):
    model_config = ConfigDict(frozen=True)

    lower: float
    upper: float

    @model_validator(mode="after")
    def lower_le_upper(self) -> "_Interval":
        if self.lower > self.upper:
            raise ValueError(f"lower must be <= upper (got lower={self.lower}, upper={self.upper})")
        return self

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def is_degenerate(self) -> bool:
        return self.width <= DEGENERATE_TOL * max(1.0, abs(self.upper))

    def contains(self, value: float, tol: float = 1e-12) -> bool:
        return self.lower - tol <= value <= self.upper + tol


class FrechetBound(_Interval):
    """Interval on E_q[Y|x] for binary W, C."""

    pi_c: float = Field(..., ge=0.0, le=1.0)
    pi_w: float = Field(..., ge=0.0, le=1.0)
    h0: list[list[float]] = Field(..., description="Bridge table indexed [w][c].")
    q11_lower: float = Field(..., description="Frechet lower bound on q(W=1, C=1|x).")
    q11_upper: float = Field(..., description="Frechet upper bound on q(W=1, C=1|x).")
    coefficient: float = Field(..., description="h00 - h10 - h01 + h11; negative swaps the endpoints.")
    q11_at_lower: float
    q11_at_upper: float


class GaussianLinearBound(_Interval):
    """Interval mu_w^T H mu_c +- rho * sum_i sigma_i(Htilde)."""

    center: float
    half_width: float = Field(..., ge=0.0)
    rho: float = Field(..., gt=0.0, le=1.0)
    singular_values: list[float]


def _probability(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise DataError(f"{name} must be in [0, 1] (got {value})")
    return value


def expected_outcome(h0_table: np.ndarray, joint: np.ndarray) -> float:
    """sum_{w,c} h[w, c] q(w, c)."""
    return float(np.sum(np.asarray(h0_table, dtype=float) * np.asarray(joint, dtype=float)))


def frechet_witness(pi_c: float, pi_w: float, q11: float) -> np.ndarray:
    """The 2x2 joint q[w, c] with marginals (pi_w, pi_c) and q(1, 1) = q11."""
    pi_c, pi_w = _probability("pi_c", pi_c), _probability("pi_w", pi_w)
    lo, hi = max(0.0, pi_c + pi_w - 1.0), min(pi_c, pi_w)
    if not lo - 1e-12 <= q11 <= hi + 1e-12:
        raise DataError(f"q11={q11} outside the admissible range [{lo}, {hi}]")
    q11 = min(max(q11, lo), hi)
    joint = np.array(
        [
            [1.0 - pi_c - pi_w + q11, pi_c - q11],
            [pi_w - q11, q11],
        ]
    )
    return np.clip(joint, 0.0, None)


def frechet_bound(h0_table: np.ndarray, pi_c: float, pi_w: float) -> FrechetBound:
    """Sharp interval on E_q[Y|x] over every joint consistent with the marginals."""
    h = np.asarray(h0_table, dtype=float)
    if h.shape != (2, 2) or not np.all(np.isfinite(h)):
        raise DataError(f"h0 table must be a finite 2x2 matrix (got shape {h.shape})")
    pi_c, pi_w = _probability("pi_c", pi_c), _probability("pi_w", pi_w)
    q_lo, q_hi = max(0.0, pi_c + pi_w - 1.0), min(pi_c, pi_w)
    coef = h[0, 0] - h[1, 0] - h[0, 1] + h[1, 1]
    base = h[0, 0] * (1.0 - pi_c - pi_w) + h[1, 0] * pi_w + h[0, 1] * pi_c
    at_lo, at_hi = (q_lo, q_hi) if coef >= 0.0 else (q_hi, q_lo)
    return FrechetBound(
        lower=base + coef * at_lo,
        upper=base + coef * at_hi,
        pi_c=pi_c,
        pi_w=pi_w,
        h0=h.tolist(),
        q11_lower=q_lo,
        q11_upper=q_hi,
        coefficient=coef,
        q11_at_lower=at_lo,
        q11_at_upper=at_hi,
    )


def _sqrt_pd(name: str, matrix: np.ndarray) -> np.ndarray:
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    if m.shape[0] != m.shape[1] or not np.allclose(m, m.T, rtol=1e-10, atol=1e-12):
        raise DataError(f"{name} must be a symmetric square matrix")
    vals, vecs = linalg.eigh(m)
    if np.min(vals) <= 0.0:
        raise DataError(f"{name} must be positive definite (min eigenvalue {np.min(vals):.3e})")
    return (vecs * np.sqrt(vals)) @ vecs.T


def whitened_bridge(h: np.ndarray, sigma_w: np.ndarray, sigma_c: np.ndarray) -> np.ndarray:
    """Htilde = Sigma_W^{1/2} H Sigma_C^{1/2} (symmetric square roots)."""
    return _sqrt_pd("Sigma_W|x", sigma_w) @ np.atleast_2d(h) @ _sqrt_pd("Sigma_C|x", sigma_c)


def gaussian_linear_bound(
    h: np.ndarray,
    mu_w: np.ndarray,
    mu_c: np.ndarray,
    sigma_w_given_x: np.ndarray,
    sigma_c_given_x: np.ndarray,
    rho: float,
) -> GaussianLinearBound:
    """Interval on E_q[Y|x] over cross-correlations R with operator norm at most rho."""
    if not 0.0 < rho <= 1.0:
        raise DataError(f"rho must be in (0, 1] (got {rho})")
    h = np.atleast_2d(np.asarray(h, dtype=float))
    mu_w = np.asarray(mu_w, dtype=float).reshape(-1)
    mu_c = np.asarray(mu_c, dtype=float).reshape(-1)
    if h.shape != (mu_w.size, mu_c.size):
        raise DataError(f"H has shape {h.shape}; means have sizes ({mu_w.size}, {mu_c.size})")
    sv = linalg.svdvals(whitened_bridge(h, sigma_w_given_x, sigma_c_given_x))
    center = float(mu_w @ h @ mu_c)
    half = float(rho * np.sum(sv))
    return GaussianLinearBound(
        lower=center - half,
        upper=center + half,
        center=center,
        half_width=half,
        rho=rho,
        singular_values=sv.tolist(),
    )
