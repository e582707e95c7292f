"""Versioned model files for fitted bridges.

Layout (zip, fixed timestamps, deflate):

    header.json        ModelHeader (format, version, kind, labels, kernels, lambdas, ...)
    gamma.npy          stage-1 weights at the stage-2 rows, n1 x n2
    u.npy              stage-2 solutions, n2 x k (one column per label)
    y.npy              stage-2 targets, n2 x k
    anchors_w.npy      stage-1 proxy anchors
    anchors_v.npy      stage-2 anchors (C for h0, X for m0)
    double_cme/*.npy   optional: batches the double-CME operator is refit from

alpha is rebuilt as gamma * u on load, the same expression used when fitting.
"""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from core.errors import DataError, ModelFileError
from core.estimators.base import BaseBridge, BridgeSummary
from core.estimators.concept import BridgeH0
from core.estimators.multidomain import BridgeM0, DoubleCmeOperator, fit_double_cme
from core.models.batch import SampleBatch
from core.models.kernels import KernelSet
from core.storage import schema

_BRIDGE_TYPES: dict[str, type[BaseBridge]] = {"h0": BridgeH0, "m0": BridgeM0}


class ModelHeader(BaseModel):
    """Self-describing part of a model file."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    format: Literal["bridgeshift-model"] = schema.MODEL_FORMAT
    format_version: int = Field(schema.MODEL_FORMAT_VERSION, ge=1)
    kind: Literal["h0", "m0"]
    labels: list[float | None] = Field(..., min_length=1, description="One entry per bridge column of u.")
    kernels: KernelSet
    lambdas: tuple[float, float]
    jitter: tuple[float, float] = (0.0, 0.0)
    summaries: list[BridgeSummary] = Field(default_factory=list)
    double_cme_lambdas: tuple[float, float] | None = Field(
        None, description="Set when the file carries a double-CME operator for partial adaptation."
    )


@dataclass(frozen=True, eq=False)
class ModelBundle:
    """Bridges sharing one stage-1 fit, plus an optional double-CME operator."""

    bridges: list[BaseBridge]
    double_cme: DoubleCmeOperator | None = None
    double_cme_batches: tuple[SampleBatch, SampleBatch] | None = None

    @property
    def kind(self) -> str:
        return self.bridges[0].kind

    @property
    def kernels(self) -> KernelSet:
        return self.bridges[0].kernels


def _npy(array: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.save(buf, np.ascontiguousarray(array), allow_pickle=False)
    return buf.getvalue()


def _write_entry(zf: zipfile.ZipFile, name: str, data: bytes) -> None:
    info = zipfile.ZipInfo(name, date_time=schema.ZIP_DATE_TIME)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    zf.writestr(info, data)


def save_model(path: Path, bundle: ModelBundle) -> Path:
    """Write ``bundle``; repeated saves of the same bundle are byte-identical."""
    bridges = bundle.bridges
    if not bridges:
        raise DataError("nothing to save: no bridges")
    first = bridges[0]
    for b in bridges[1:]:
        if b.kind != first.kind or (b.gamma is not first.gamma and not np.array_equal(b.gamma, first.gamma)):
            raise DataError("bridges in one model file must share kind and stage-1 weights")
    if (bundle.double_cme is None) != (bundle.double_cme_batches is None):
        raise DataError("a double-CME operator is saved together with the batches it was fit on")
    header = ModelHeader(
        kind=first.kind,
        labels=[b.label for b in bridges],
        kernels=first.kernels,
        lambdas=first.lambdas,
        jitter=first.jitter,
        summaries=[b.summary() for b in bridges],
        double_cme_lambdas=bundle.double_cme.lambdas if bundle.double_cme is not None else None,
    )
    entries: list[tuple[str, bytes]] = [
        (schema.ENTRY_HEADER, json.dumps(header.model_dump(mode="json"), indent=2, sort_keys=True).encode()),
        (schema.ENTRY_GAMMA, _npy(first.gamma)),
        (schema.ENTRY_U, _npy(np.column_stack([b.u for b in bridges]))),
        (schema.ENTRY_Y, _npy(np.column_stack([b.y for b in bridges]))),
        (schema.ENTRY_ANCHORS_W, _npy(first.anchors_w)),
        (schema.ENTRY_ANCHORS_V, _npy(first.anchors_v)),
    ]
    if bundle.double_cme_batches is not None:
        stage3, stage4 = bundle.double_cme_batches
        entries += [
            (schema.ENTRY_DOUBLE_W3, _npy(stage3["W"])),
            (schema.ENTRY_DOUBLE_X3, _npy(stage3["X"])),
            (schema.ENTRY_DOUBLE_X4, _npy(stage4["X"])),
            (schema.ENTRY_DOUBLE_C4, _npy(stage4["C"])),
        ]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(path, "w") as zf:
        for name, data in entries:
            _write_entry(zf, name, data)
    logger.info("Saved {} model ({} bridge(s)) to {}", first.kind, len(bridges), path)
    return path


def _read_array(zf: zipfile.ZipFile, name: str) -> np.ndarray:
    try:
        with zf.open(name) as fh:
            return np.load(io.BytesIO(fh.read()), allow_pickle=False)
    except KeyError as exc:
        raise ModelFileError(f"model file is missing entry {name}") from exc
    except ValueError as exc:
        raise ModelFileError(f"model file entry {name} is not a valid array") from exc


def _read_header(zf: zipfile.ZipFile) -> ModelHeader:
    try:
        raw = json.loads(zf.read(schema.ENTRY_HEADER))
    except KeyError as exc:
        raise ModelFileError("not a BridgeShift model file: header.json missing") from exc
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"model header is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict) or raw.get("format") != schema.MODEL_FORMAT:
        raise ModelFileError("not a BridgeShift model file")
    version = raw.get("format_version")
    if version != schema.MODEL_FORMAT_VERSION:
        raise ModelFileError(
            f"unsupported model file version {version!r}; this build reads version {schema.MODEL_FORMAT_VERSION}"
        )
    try:
        return ModelHeader.model_validate(raw)
    except ValidationError as exc:
        raise ModelFileError(f"invalid model header: {exc}") from exc


def load_model(path: Path) -> ModelBundle:
    """Read a model file; raises ModelFileError for anything that is not a valid current-version file."""
    path = Path(path)
    if not path.is_file():
        raise ModelFileError(f"model file not found: {path}")
    try:
        with zipfile.ZipFile(path, "r") as zf:
            header = _read_header(zf)
            gamma = _read_array(zf, schema.ENTRY_GAMMA)
            u = _read_array(zf, schema.ENTRY_U)
            y = _read_array(zf, schema.ENTRY_Y)
            anchors_w = _read_array(zf, schema.ENTRY_ANCHORS_W)
            anchors_v = _read_array(zf, schema.ENTRY_ANCHORS_V)
            double = None
            if header.double_cme_lambdas is not None:
                double = tuple(
                    _read_array(zf, name)
                    for name in (
                        schema.ENTRY_DOUBLE_W3,
                        schema.ENTRY_DOUBLE_X3,
                        schema.ENTRY_DOUBLE_X4,
                        schema.ENTRY_DOUBLE_C4,
                    )
                )
    except zipfile.BadZipFile as exc:
        raise ModelFileError(f"{path} is not a model file (bad zip container)") from exc

    n1, n2 = gamma.shape if gamma.ndim == 2 else (-1, -1)
    k = len(header.labels)
    if (
        gamma.ndim != 2
        or u.shape != (n2, k)
        or y.shape != (n2, k)
        or anchors_w.shape[0] != n1
        or anchors_v.shape[0] != n2
    ):
        raise ModelFileError(
            f"inconsistent array shapes: gamma {gamma.shape}, u {u.shape}, y {y.shape}, "
            f"anchors_w {anchors_w.shape}, anchors_v {anchors_v.shape}"
        )
    cls = _BRIDGE_TYPES[header.kind]
    bridges = [
        cls(
            alpha=gamma * u[:, j][None, :],
            gamma=gamma,
            u=u[:, j],
            anchors_w=anchors_w,
            anchors_v=anchors_v,
            y=y[:, j],
            kernels=header.kernels,
            lambdas=header.lambdas,
            jitter=header.jitter,
            label=label,
        )
        for j, label in enumerate(header.labels)
    ]
    operator, batches = None, None
    if double is not None and header.double_cme_lambdas is not None:
        w3, x3, x4, c4 = double
        batches = (
            SampleBatch.from_arrays("double_cme:stage3", W=w3, X=x3),
            SampleBatch.from_arrays("double_cme:stage4", X=x4, C=c4),
        )
        operator = fit_double_cme(batches[0], batches[1], header.kernels, *header.double_cme_lambdas)
    logger.info("Loaded {} model ({} bridge(s)) from {}", header.kind, len(bridges), path)
    return ModelBundle(bridges=bridges, double_cme=operator, double_cme_batches=batches)
