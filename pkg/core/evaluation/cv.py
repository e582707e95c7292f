"""K-fold grid search.

Every (grid cell, fold) pair is an independent job. Jobs run on a thread pool and
the fold table is assembled in (cell, fold) order whatever order they finish in.
A cell whose fit or score raises one of CELL_FAILURES gets the metric's worst
score for that fold; the search carries on.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Generic, TypeVar

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, field_validator
from sklearn.model_selection import KFold

from core.errors import BridgeShiftError, ConfigError, DataError
from core.evaluation.metrics import Metric, is_better, worst_score
from core.models.batch import SampleBatch

ModelT = TypeVar("ModelT")

FitFn = Callable[[Mapping[str, Any], SampleBatch], ModelT]
ScoreFn = Callable[[ModelT, SampleBatch], float]

LAMBDA_DECADES = (1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1)
CELL_FAILURES = (BridgeShiftError, np.linalg.LinAlgError, ValueError, ArithmeticError)


def default_grid() -> dict[str, list[float]]:
    """Joint (lambda1, lambda2) grid, one value per decade from 1e-6 to 1e-1."""
    return {"lambda1": list(LAMBDA_DECADES), "lambda2": list(LAMBDA_DECADES)}


class CvPlan(BaseModel):
    """Cross-validation plan: fold count, selection metric, hyperparameter grid, seed."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    folds: int = Field(5, ge=2, description="Number of folds.")
    metric: Metric | None = Field(
        None,
        description="Selection metric; None picks AUROC for classification scenarios and MSE otherwise.",
    )
    grid: dict[str, list[float]] = Field(
        default_factory=default_grid,
        description="Hyperparameter name -> candidate values; cells are the product in key order.",
    )
    seed: int = Field(0, ge=0, le=2**32 - 1, description="Fold-assignment seed.")

    @field_validator("grid")
    @classmethod
    def grid_nonempty(cls, grid: dict[str, list[float]]) -> dict[str, list[float]]:
        if not grid:
            raise ValueError("grid must name at least one hyperparameter")
        empty = [name for name, values in grid.items() if not values]
        if empty:
            raise ValueError(f"grid entries have no candidate values: {', '.join(empty)}")
        return grid

    def cells(self) -> list[dict[str, float]]:
        """Grid cells in grid order (the last key varies fastest)."""
        keys = list(self.grid)
        return [dict(zip(keys, values)) for values in itertools.product(*(self.grid[k] for k in keys))]


def fold_indices(n: int, folds: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """(train, held-out) index pairs; held-out sets partition range(n)."""
    if n < folds:
        raise DataError(f"{n} rows cannot be split into {folds} folds")
    splitter = KFold(n_splits=folds, shuffle=True, random_state=seed)
    return [(np.sort(tr), np.sort(te)) for tr, te in splitter.split(np.arange(n))]


@dataclass(frozen=True)
class CvResult(Generic[ModelT]):
    best: dict[str, float]
    best_score: float
    table: pd.DataFrame  # one row per (cell, fold)


def _run_job(
    fit_fn: FitFn[ModelT],
    score_fn: ScoreFn[ModelT],
    params: dict[str, float],
    train: SampleBatch,
    held_out: SampleBatch,
    metric: Metric,
) -> tuple[float, str | None]:
    try:
        return float(score_fn(fit_fn(params, train), held_out)), None
    except CELL_FAILURES as exc:
        return worst_score(metric), str(exc)


def cross_validate(
    fit_fn: FitFn[ModelT],
    score_fn: ScoreFn[ModelT],
    data: SampleBatch,
    plan: CvPlan,
    *,
    metric: Metric | None = None,
    workers: int = 1,
) -> CvResult[ModelT]:
    """Exhaustive grid search; best = best mean fold score, ties to the first cell in grid order.

    ``metric`` overrides ``plan.metric``; one of them must be set.
    """
    metric = metric or plan.metric
    if metric is None:
        raise ConfigError("cross-validation needs a metric")
    cells = plan.cells()
    columns = ["cell", "fold", *plan.grid, "score", "error"]
    if len(cells) == 1:
        logger.debug("Single grid cell {}; skipping cross-validation", cells[0])
        return CvResult(best=cells[0], best_score=float("nan"), table=pd.DataFrame(columns=columns))

    splits = fold_indices(data.n, plan.folds, plan.seed)
    parts = [(data.take(tr, name=f"{data.name}:fold{k}:train"), data.take(te, name=f"{data.name}:fold{k}:test"))
             for k, (tr, te) in enumerate(splits)]
    jobs = [(c, k) for c in range(len(cells)) for k in range(len(parts))]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [
            pool.submit(_run_job, fit_fn, score_fn, cells[c], parts[k][0], parts[k][1], metric) for c, k in jobs
        ]
        outcomes = [f.result() for f in futures]

    rows = []
    for (c, k), (value, error) in zip(jobs, outcomes):
        if error is not None:
            logger.warning("CV cell {} fold {} failed: {}", cells[c], k, error)
        rows.append({"cell": c, "fold": k, **cells[c], "score": value, "error": error or ""})
    table = pd.DataFrame(rows, columns=columns)

    means = table.groupby("cell", sort=True)["score"].mean()
    best_cell, best_score = 0, float(means.iloc[0])
    for c in range(1, len(cells)):
        if is_better(metric, float(means.iloc[c]), best_score):
            best_cell, best_score = c, float(means.iloc[c])
    logger.info(
        "CV over {} cells x {} folds: best {} ({}={:.4g})", len(cells), plan.folds, cells[best_cell], metric, best_score
    )
    return CvResult(best=cells[best_cell], best_score=best_score, table=table)


def select(
    fit_fn: FitFn[ModelT],
    score_fn: ScoreFn[ModelT],
    data: SampleBatch,
    plan: CvPlan,
    *,
    metric: Metric | None = None,
    workers: int = 1,
) -> tuple[ModelT, CvResult[ModelT]]:
    """Cross-validate, then refit the winning cell on all of ``data``."""
    result = cross_validate(fit_fn, score_fn, data, plan, metric=metric, workers=workers)
    return fit_fn(result.best, data), result

