"""Data contracts: kernel specs (Pydantic) and sample batches."""

from core.models.batch import VARIABLES, SampleBatch
from core.models.kernels import (
    BinaryKernel,
    ColumnwiseProductKernel,
    GaussianKernel,
    KernelSet,
    KernelSpec,
)

__all__ = [
    "VARIABLES",
    "BinaryKernel",
    "ColumnwiseProductKernel",
    "GaussianKernel",
    "KernelSet",
    "KernelSpec",
    "SampleBatch",
]
