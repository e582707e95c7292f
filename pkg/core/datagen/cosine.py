"""Cosine counterexample: finitely many domains cannot pin down a bridge.

Domain r has density p_r(u) = (1 + cos(r u)) / (2 pi) on [-pi, pi]. The residual
g(u) = cos((k_z + 1) u) is orthogonal to every one of the k_z source densities, so
adding g to a bridge leaves every source-domain moment unchanged while shifting
the prediction on domain k_z + 1 by the integral of g p_{k_z+1}, which is 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from core.datagen.specs import CosineCounterexampleSpec
from core.errors import DataError


@dataclass(frozen=True, eq=False)
class CosineTables:
    grid: np.ndarray       # U grid over [-pi, pi]
    densities: np.ndarray  # (k_z + 1) x grid: sources 1..k_z, then the held-out domain k_z + 1
    residual: np.ndarray   # g on the grid
    k_z: int

    def inner(self, r: int) -> float:
        """Trapezoid integral of g(u) * (1 + cos(r u))."""
        return float(trapezoid(self.residual * (1.0 + np.cos(r * self.grid)), self.grid))

    def orthogonality(self) -> np.ndarray:
        """inner(r) for r = 1..k_z + 1; zero for sources, pi for the held-out domain."""
        return np.array([self.inner(r) for r in range(1, self.k_z + 2)])

    def mass(self) -> np.ndarray:
        return trapezoid(self.densities, self.grid, axis=1)


def gen_cosine_counterexample(k_z: int | CosineCounterexampleSpec, grid_size: int = 4096) -> CosineTables:
    """Density tables for domains 1..k_z + 1 and the residual cos((k_z + 1) u)."""
    if isinstance(k_z, CosineCounterexampleSpec):
        k_z, grid_size = k_z.k_z, k_z.grid_size
    if k_z < 1:
        raise DataError(f"k_z must be >= 1 (got {k_z})")
    grid = np.linspace(-np.pi, np.pi, grid_size)
    r = np.arange(1, k_z + 2)[:, None]
    densities = (1.0 + np.cos(r * grid[None, :])) / (2.0 * np.pi)
    return CosineTables(grid=grid, densities=densities, residual=np.cos((k_z + 1) * grid), k_z=k_z)
