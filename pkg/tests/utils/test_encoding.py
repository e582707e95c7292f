"""Tests for one-hot encoding of discrete columns."""

from __future__ import annotations

import numpy as np
import pytest

from core.errors import DataError
from core.utils.encoding import categories_of, one_hot


def test_one_hot_sorted_order() -> None:
    matrix, cats = one_hot(np.array([2.0, 0.0, 2.0]))
    np.testing.assert_array_equal(cats, [0.0, 2.0])
    np.testing.assert_array_equal(matrix, [[0, 1], [1, 0], [0, 1]])


def test_first_appearance_order() -> None:
    np.testing.assert_array_equal(categories_of(np.array([3.0, 1.0, 3.0, 2.0]), order="first"), [3.0, 1.0, 2.0])


def test_single_column_matrix_is_accepted() -> None:
    matrix, cats = one_hot(np.array([[1.0], [0.0]]))
    np.testing.assert_array_equal(cats, [0.0, 1.0])
    np.testing.assert_array_equal(matrix, [[0, 1], [1, 0]])


def test_given_categories_fix_the_column_order() -> None:
    matrix, _ = one_hot(np.array([0.0, 0.0]), categories=np.array([1.0, 0.0]))
    np.testing.assert_array_equal(matrix, [[0, 1], [0, 1]])


def test_one_hot_unseen_category() -> None:
    with pytest.raises(DataError, match="not among categories"):
        one_hot(np.array([5.0]), categories=np.array([0.0, 1.0]))


def test_multi_column_codes_rejected() -> None:
    with pytest.raises(DataError, match="single code column"):
        one_hot(np.zeros((3, 2)))


def test_unknown_order_rejected() -> None:
    with pytest.raises(DataError, match="unknown category order"):
        categories_of(np.array([1.0]), order="random")  # type: ignore[arg-type]
