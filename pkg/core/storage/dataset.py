"""CSV I/O for sample batches, predictions and metric tables.

All floats are written with 17 significant digits so a read-back batch equals the
in-memory one bit for bit.
"""

from __future__ import annotations

import re
from collections import defaultdict
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger

from core.datagen.cosine import CosineTables
from core.datagen.specs import GeneratedData, Split
from core.errors import DataError
from core.models.batch import VARIABLES, SampleBatch
from core.storage import schema

_COLUMN_RE = re.compile(schema.COLUMN_PATTERN)
_PREFIX_TO_VAR = {prefix: var for var, prefix in schema.COLUMN_PREFIX.items()}


def column_names(variable: str, width: int) -> list[str]:
    """CSV headers for one variable block."""
    prefix = schema.COLUMN_PREFIX[variable]
    if variable in schema.SCALAR_VARIABLES and width == 1:
        return [prefix]
    return [f"{prefix}{j}" for j in range(width)]


def batch_to_frame(batch: SampleBatch, *, include_latent: bool = False) -> pd.DataFrame:
    blocks = []
    for var in batch.variables:
        if var in schema.LATENT_VARIABLES and not include_latent:
            continue
        blocks.append(pd.DataFrame(batch[var], columns=column_names(var, batch.dim(var))))
    if not blocks:
        return pd.DataFrame()
    return pd.concat(blocks, axis=1)


def frame_to_batch(frame: pd.DataFrame, name: str = "batch") -> SampleBatch:
    """Parse ``x0.., w0.., c0.., y, z`` columns back into variable blocks."""
    grouped: dict[str, list[tuple[int, str]]] = defaultdict(list)
    for col in frame.columns:
        match = _COLUMN_RE.match(str(col))
        if match is None:
            raise DataError(f"{name}: unexpected column {col!r}; expected x*, w*, c*, y, z or u*")
        index = int(match["index"]) if match["index"] else -1
        grouped[_PREFIX_TO_VAR[match["prefix"]]].append((index, str(col)))
    columns: dict[str, np.ndarray] = {}
    for var in VARIABLES:
        if var not in grouped:
            continue
        entries = sorted(grouped[var])
        indices = [i for i, _ in entries]
        if indices != [-1] and indices != list(range(len(entries))):
            raise DataError(f"{name}: columns for {var} must be numbered 0..{len(entries) - 1} (got {indices})")
        try:
            columns[var] = frame[[c for _, c in entries]].to_numpy(dtype=float)
        except ValueError as exc:
            raise DataError(f"{name}: non-numeric values in {var} columns") from exc
    return SampleBatch(columns, name=name)


def write_batch(batch: SampleBatch, path: Path, *, include_latent: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    batch_to_frame(batch, include_latent=include_latent).to_csv(
        path, index=False, float_format=schema.FLOAT_FORMAT, lineterminator=schema.LINE_TERMINATOR
    )
    return path


def read_batch(path: Path, *, require: tuple[str, ...] = ()) -> SampleBatch:
    """Read a dataset CSV; ``require`` lists variables that must be present."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"dataset file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=float, float_precision="round_trip")
    except pd.errors.EmptyDataError as exc:
        raise DataError(f"{path} has no header row") from exc
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric values") from exc
    batch = frame_to_batch(frame, name=path.stem)
    if require:
        batch.require(*require, min_rows=0)
    return batch


def dataset_filename(domain: str, split: Split) -> str:
    return schema.DATASET_FILE.format(domain=domain, split=split)


def write_dataset(data: GeneratedData, out_dir: Path, *, include_latent: bool = False) -> list[Path]:
    """One CSV per (domain, split) in file order."""
    out_dir = Path(out_dir)
    written = [
        write_batch(batch, out_dir / dataset_filename(domain, split), include_latent=include_latent)
        for domain, split, batch in data.batches()
    ]
    logger.info("Wrote {} dataset files to {}", len(written), out_dir)
    return written


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    """Predictions, metrics and sweep tables."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=schema.FLOAT_FORMAT, lineterminator=schema.LINE_TERMINATOR)
    return path


def read_frame(path: Path, *, require: tuple[str, ...] = ()) -> pd.DataFrame:
    """Read a predictions or metrics CSV; ``require`` lists columns that must be present."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"file not found: {path}")
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except pd.errors.EmptyDataError as exc:
        raise DataError(f"{path} has no header row") from exc
    missing = [c for c in require if c not in frame.columns]
    if missing:
        raise DataError(f"{path}: missing columns {missing}")
    return frame


def cosine_frame(tables: CosineTables) -> pd.DataFrame:
    """Grid, one density column per domain (p1..p{k_z+1}) and the residual g."""
    columns = {schema.COL_GRID: tables.grid}
    for r, density in enumerate(tables.densities, start=1):
        columns[f"{schema.COL_DENSITY_PREFIX}{r}"] = density
    columns[schema.COL_RESIDUAL] = tables.residual
    return pd.DataFrame(columns)
