"""SampleBatch: a named set of i.i.d. rows over a subset of {X, W, C, Y, Z, U}.

Every column is a 2-D float matrix (n rows). Discrete variables are stored either
as a single code column (Z domain index, binary Y) or one-hot encoded (C concepts).
Batches are immutable: arrays are copied and marked read-only on construction.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from core.errors import DataError

# Variable order is also the CSV column-block order.
VARIABLES: tuple[str, ...] = ("X", "W", "C", "Y", "Z", "U")


def _as_block(name: str, values: object) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DataError(f"column block {name} must be 1-D or 2-D (got ndim={arr.ndim})")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"column block {name} contains non-finite values")
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """Immutable column blocks keyed by variable name."""

    columns: Mapping[str, np.ndarray]
    name: str = "batch"
    _n: int = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        blocks: dict[str, np.ndarray] = {}
        for var, values in self.columns.items():
            key = var.upper()
            if key not in VARIABLES:
                raise DataError(f"unknown variable {var!r}; expected one of {', '.join(VARIABLES)}")
            blocks[key] = _as_block(key, values)
        sizes = {key: block.shape[0] for key, block in blocks.items()}
        if len(set(sizes.values())) > 1:
            raise DataError(f"batch '{self.name}' has ragged columns: {sizes}")
        ordered = {key: blocks[key] for key in VARIABLES if key in blocks}
        object.__setattr__(self, "columns", MappingProxyType(ordered))
        object.__setattr__(self, "_n", next(iter(sizes.values()), 0))

    @classmethod
    def from_arrays(cls, name: str = "batch", **arrays: object) -> "SampleBatch":
        """Build a batch from keyword arrays, e.g. ``SampleBatch.from_arrays(X=x, Y=y)``."""
        return cls(columns=dict(arrays), name=name)

    @classmethod
    def concat(cls, batches: Sequence["SampleBatch"], name: str = "batch") -> "SampleBatch":
        """Stack batches row-wise. All batches must carry the same variables."""
        if not batches:
            raise DataError("cannot concatenate an empty list of batches")
        variables = batches[0].variables
        for batch in batches[1:]:
            if batch.variables != variables:
                raise DataError(
                    f"cannot concatenate batches with variables {variables} and {batch.variables}"
                )
        return cls(
            columns={var: np.vstack([b[var] for b in batches]) for var in variables},
            name=name,
        )

    @property
    def n(self) -> int:
        return self._n

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(self.columns)

    def dim(self, variable: str) -> int:
        return self[variable].shape[1]

    def has(self, *variables: str) -> bool:
        return all(v.upper() in self.columns for v in variables)

    def __getitem__(self, variable: str) -> np.ndarray:
        key = variable.upper()
        if key not in self.columns:
            raise DataError(f"batch '{self.name}' has no column {key}")
        return self.columns[key]

    def __len__(self) -> int:
        return self._n

    def require(self, *variables: str, min_rows: int = 1) -> "SampleBatch":
        """Raise DataError unless every variable is present and there are enough rows."""
        missing = [v.upper() for v in variables if v.upper() not in self.columns]
        if missing:
            raise DataError(f"batch '{self.name}' is missing column(s) {', '.join(missing)}")
        if self._n < min_rows:
            raise DataError(f"batch '{self.name}' has {self._n} rows; need at least {min_rows}")
        return self

    def select(self, *variables: str) -> "SampleBatch":
        self.require(*variables, min_rows=0)
        return SampleBatch({v.upper(): self[v] for v in variables}, name=self.name)

    def take(self, indices: Iterable[int] | np.ndarray, name: str | None = None) -> "SampleBatch":
        idx = np.asarray(indices)
        idx = np.flatnonzero(idx) if idx.dtype == bool else idx.astype(np.intp)
        return SampleBatch(
            {var: block[idx] for var, block in self.columns.items()},
            name=name or self.name,
        )

    def with_columns(self, **arrays: object) -> "SampleBatch":
        merged: dict[str, object] = dict(self.columns)
        merged.update({k.upper(): v for k, v in arrays.items()})
        return SampleBatch(merged, name=self.name)

    def split(self, fraction: float, seed: int) -> tuple["SampleBatch", "SampleBatch"]:
        """Seeded random split into (first, second) with ``round(fraction * n)`` rows first."""
        if not 0.0 < fraction < 1.0:
            raise DataError(f"split fraction must be in (0, 1) (got {fraction})")
        if self._n < 2:
            raise DataError(f"batch '{self.name}' has {self._n} rows; cannot split")
        rng = np.random.Generator(np.random.Philox(seed))
        order = rng.permutation(self._n)
        cut = min(max(int(round(fraction * self._n)), 1), self._n - 1)
        return (
            self.take(np.sort(order[:cut]), name=f"{self.name}:stage1"),
            self.take(np.sort(order[cut:]), name=f"{self.name}:stage2"),
        )

    def domains(self) -> list[tuple[int, "SampleBatch"]]:
        """Split by the Z domain index (sorted codes). Rows keep their original order."""
        z = self.require("Z")["Z"]
        if z.shape[1] != 1:
            raise DataError("domain split needs a single Z code column")
        codes = z[:, 0]
        return [
            (int(code), self.take(codes == code, name=f"{self.name}:z{int(code)}"))
            for code in np.unique(codes)
        ]
