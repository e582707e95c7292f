"""Kernel specifications.

Kernels are plain Pydantic models so they can be validated from config, compared
for compatibility between fitted components, and written into model-file headers.
Evaluation lives in ``core.linalg.gram``.

Gaussian convention: k(x, x') = exp(-||x - x'||^2 / (2 * length_scale^2)).
"""

from __future__ import annotations

from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field

from core.errors import DataError


class GaussianKernel(BaseModel):
    """Gaussian (RBF) kernel on a whole column block."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["gaussian"] = "gaussian"
    length_scale: float = Field(..., gt=0.0, description="Length scale l in exp(-d^2 / (2 l^2)).")


class BinaryKernel(BaseModel):
    """Delta kernel: 1 when two rows are identical, else 0."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["binary"] = "binary"


class ColumnwiseProductKernel(BaseModel):
    """Product of one kernel per input column."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["columnwise"] = "columnwise"
    kernels: tuple["KernelSpec", ...] = Field(..., min_length=1)

    @classmethod
    def repeat(cls, kernel: "KernelSpec", n_columns: int) -> "ColumnwiseProductKernel":
        """Same kernel on every one of ``n_columns`` columns."""
        if n_columns < 1:
            raise DataError(f"columnwise kernel needs at least one column (got {n_columns})")
        return cls(kernels=tuple([kernel] * n_columns))


KernelSpec = Annotated[
    Union[GaussianKernel, BinaryKernel, ColumnwiseProductKernel],
    Field(discriminator="kind"),
]

ColumnwiseProductKernel.model_rebuild()


class KernelSet(BaseModel):
    """One kernel per variable. Unset entries are filled by ``resolve_kernels``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    x: KernelSpec | None = None
    w: KernelSpec | None = None
    c: KernelSpec | None = None
    z: KernelSpec | None = None

    def get(self, variable: str) -> KernelSpec:
        """Kernel for variable ``X``/``W``/``C``/``Z`` (case-insensitive)."""
        kernel = getattr(self, variable.lower(), None)
        if kernel is None:
            raise DataError(f"no kernel set for variable {variable.upper()}")
        return kernel
