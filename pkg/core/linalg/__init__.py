"""Kernel evaluation, structured products and ridge solves."""

from core.linalg.gram import (
    GramMatrix,
    check_kernels_match,
    default_kernel,
    default_kinds,
    gram,
    kernels_match,
    median_heuristic,
    resolve_kernels,
    with_length_scale,
)
from core.linalg.products import hadamard, khatri_rao
from core.linalg.solve import RidgeSolver, jitter_schedule

__all__ = [
    "GramMatrix",
    "RidgeSolver",
    "check_kernels_match",
    "default_kernel",
    "default_kinds",
    "gram",
    "hadamard",
    "jitter_schedule",
    "kernels_match",
    "khatri_rao",
    "median_heuristic",
    "resolve_kernels",
    "with_length_scale",
]
