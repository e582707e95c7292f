"""Structured matrix products used by the two-stage estimators."""

from __future__ import annotations

import numpy as np

from core.errors import DataError


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise (Schur) product of two equally shaped matrices."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DataError(f"hadamard shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def khatri_rao(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Columnwise Khatri-Rao product: column j of the result is kron(a[:, j], b[:, j])."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2:
        raise DataError(f"khatri_rao needs 2-D inputs (got {a.ndim}-D and {b.ndim}-D)")
    if a.shape[1] != b.shape[1]:
        raise DataError(f"khatri_rao column mismatch: {a.shape[1]} vs {b.shape[1]}")
    return (a[:, None, :] * b[None, :, :]).reshape(-1, a.shape[1])
