"""Regularized PSD solves: (M + reg * I)^{-1} rhs via Cholesky.

Gram matrices are often rank-deficient at small n, so a failed factorization is
retried with diagonal jitter 1e-10 * trace(M) / n, growing tenfold per retry.
The jitter actually applied is kept on the solver and logged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from loguru import logger
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from core.errors import DataError, NumericalError

JITTER_SCALE = 1e-10
JITTER_GROWTH = 10.0
MAX_JITTER_RETRIES = 3
SYMMETRY_RTOL = 1e-8


def jitter_schedule(matrix: np.ndarray, max_retries: int = MAX_JITTER_RETRIES) -> list[float]:
    """Diagonal jitters tried in order; the first entry is always 0."""
    n = matrix.shape[0]
    base = JITTER_SCALE * float(np.trace(matrix)) / n if n else JITTER_SCALE
    if base <= 0.0:
        base = JITTER_SCALE
    return [0.0] + [base * JITTER_GROWTH**k for k in range(max_retries)]


@dataclass(frozen=True, eq=False)
class RidgeSolver:
    """Cholesky factor of ``matrix + (reg + jitter) * I``."""

    matrix: np.ndarray
    reg: float
    jitter: float
    _factor: tuple[np.ndarray, bool]

    @classmethod
    def factorize(
        cls,
        matrix: np.ndarray,
        reg: float,
        *,
        max_retries: int = MAX_JITTER_RETRIES,
        label: str = "ridge",
    ) -> "RidgeSolver":
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DataError(f"{label}: matrix must be square (got shape {m.shape})")
        if m.shape[0] == 0:
            raise DataError(f"{label}: cannot factorize an empty matrix")
        if not np.all(np.isfinite(m)):
            raise DataError(f"{label}: matrix contains non-finite values")
        if not np.isfinite(reg) or reg < 0.0:
            raise DataError(f"{label}: regularization must be finite and >= 0 (got {reg})")
        scale = max(float(np.max(np.abs(m))), 1.0)
        if np.max(np.abs(m - m.T)) > SYMMETRY_RTOL * scale:
            raise DataError(f"{label}: matrix is not symmetric")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)

        eye = np.eye(m.shape[0])
        for jitter in jitter_schedule(m, max_retries):
            try:
                factor = cho_factor(m + (reg + jitter) * eye, lower=False, check_finite=False)
            except LinAlgError:
                continue
            if not np.all(np.isfinite(factor[0])) or np.min(np.abs(np.diag(factor[0]))) == 0.0:
                continue
            if jitter > 0.0:
                logger.warning("{}: Cholesky needed diagonal jitter {:.3e} (n={})", label, jitter, m.shape[0])
            return cls(matrix=m, reg=float(reg), jitter=jitter, _factor=factor)
        raise NumericalError(
            f"{label}: Cholesky factorization failed at maximum jitter "
            f"(n={m.shape[0]}, reg={reg}, retries={max_retries})"
        )

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """(matrix + (reg + jitter) I)^{-1} rhs for a vector or a matrix of right-hand sides."""
        b = np.asarray(rhs, dtype=float)
        if b.shape[0] != self.n:
            raise DataError(f"rhs has {b.shape[0]} rows; solver is {self.n} x {self.n}")
        return cho_solve(self._factor, b, check_finite=False)
