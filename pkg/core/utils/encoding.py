"""One-hot encoding of discrete columns.

Two orderings are used: concept columns keep first-appearance order within the batch,
class labels use sorted order so score column ``l`` always means class ``l``.
"""

from __future__ import annotations

from typing import Literal

import numpy as np

from core.errors import DataError

CategoryOrder = Literal["first", "sorted"]


def categories_of(values: np.ndarray, order: CategoryOrder = "sorted") -> np.ndarray:
    """Distinct values of a 1-D code vector in the requested order."""
    codes = _as_codes(values)
    uniq, first_idx = np.unique(codes, return_index=True)
    if order == "sorted":
        return uniq
    if order == "first":
        return codes[np.sort(first_idx)]
    raise DataError(f"unknown category order {order!r}")


def one_hot(
    values: np.ndarray,
    categories: np.ndarray | None = None,
    order: CategoryOrder = "sorted",
) -> tuple[np.ndarray, np.ndarray]:
    """Encode a code vector as an n x k indicator matrix.

    Returns ``(matrix, categories)``. When ``categories`` is given, every value must be
    one of them (unseen categories in a query batch are a data error).
    """
    codes = _as_codes(values)
    cats = categories_of(codes, order) if categories is None else np.asarray(categories, dtype=float)
    matches = codes[:, None] == cats[None, :]
    unknown = ~matches.any(axis=1)
    if unknown.any():
        raise DataError(f"value(s) {np.unique(codes[unknown]).tolist()} not among categories {cats.tolist()}")
    return matches.astype(float), cats


def _as_codes(values: np.ndarray) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise DataError(f"expected a single code column (got shape {arr.shape})")
    return arr
