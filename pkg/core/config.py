"""Configuration for BridgeShift experiments.

Loads from TOML (via stdlib tomllib) and writes TOML with tomli-w, so a dumped
config parses back to an equal one. Handles: the scenario (data-generating
process), methods to compare, kernel choices, ridge penalties, the
cross-validation plan, seeds, replicates and the output directory.
Unknown keys are rejected at every level.
"""

from __future__ import annotations

import tomllib
from pathlib import Path
from typing import TypeVar

import tomli_w
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from core.datagen.specs import ConceptClassificationSpec, DgpSpec
from core.evaluation.cv import CvPlan
from core.evaluation.scenario import DEFAULT_LAMBDA, DEFAULT_STAGE_SPLIT, HYPERPARAMETERS, Method
from core.linalg.gram import KernelKind
from core.models.kernels import KernelSet

KERNEL_VARIABLES = ("X", "W", "C", "Z")

V = TypeVar("V")

DEFAULT_METHODS = ("proposed-concept", "ERM", "COVARS", "LABELS", "ORACLE")


def _upper_keys(mapping: dict[str, V], what: str) -> dict[str, V]:
    out = {str(k).upper(): v for k, v in mapping.items()}
    unknown = sorted(set(out) - set(KERNEL_VARIABLES))
    if unknown:
        raise ValueError(f"{what}: unknown variables {unknown}; expected a subset of {list(KERNEL_VARIABLES)}")
    return out


class KernelConfig(BaseModel):
    """Kernel family per variable; Gaussian scales default to the median heuristic."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kinds: dict[str, KernelKind] = Field(
        default_factory=dict,
        description="Variable (X, W, C, Z) -> gaussian | binary | columnwise_gaussian | columnwise_binary.",
    )
    length_scales: dict[str, float] = Field(
        default_factory=dict,
        description="Fixed Gaussian length scales per variable; unset ones use the median heuristic.",
    )
    explicit: KernelSet | None = Field(None, description="Fully specified kernels; overrides kinds and scales.")

    @field_validator("kinds")
    @classmethod
    def kinds_known(cls, kinds: dict[str, KernelKind]) -> dict[str, KernelKind]:
        return _upper_keys(kinds, "kernels.kinds")

    @field_validator("length_scales")
    @classmethod
    def scales_positive(cls, scales: dict[str, float]) -> dict[str, float]:
        scales = _upper_keys(scales, "kernels.length_scales")
        bad = {k: v for k, v in scales.items() if not v > 0.0}
        if bad:
            raise ValueError(f"length scales must be positive (got {bad})")
        return scales


class LambdaConfig(BaseModel):
    """Ridge penalties for ``fit``; each is scaled by the stage's sample size."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    stage1: float = Field(DEFAULT_LAMBDA, gt=0.0, description="Stage-1 CME penalty (lambda1 or lambda3).")
    stage2: float = Field(DEFAULT_LAMBDA, gt=0.0, description="Stage-2 bridge penalty (lambda2 or lambda4).")
    target: float = Field(DEFAULT_LAMBDA, gt=0.0, description="Penalty of the target embedding used by adapt.")
    double_cme: tuple[float, float] | None = Field(
        None, description="(lambda3, lambda4) of the double-CME operator; set to fit it for partial adaptation."
    )

    @field_validator("double_cme")
    @classmethod
    def double_cme_positive(cls, value: tuple[float, float] | None) -> tuple[float, float] | None:
        if value is not None and not all(v > 0.0 for v in value):
            raise ValueError(f"double_cme penalties must be positive (got {value})")
        return value


class ExperimentConfig(BaseModel):
    """BridgeShift experiment configuration."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    scenario: DgpSpec = Field(
        default_factory=ConceptClassificationSpec,
        description="Data-generating process; the ``kind`` key selects the scenario.",
    )
    methods: list[str] = Field(default_factory=lambda: list(DEFAULT_METHODS), description="Methods to compare.")
    shifts: list[float | tuple[float, float]] | None = Field(
        None, description="Target-shift values swept by ``sweep``; None runs the scenario as configured."
    )
    kernels: KernelConfig = Field(default_factory=KernelConfig)
    lambdas: LambdaConfig = Field(default_factory=LambdaConfig)
    cv: CvPlan = Field(default_factory=CvPlan)
    seed: int = Field(0, ge=0, description="Root seed for data generation and splits.")
    replicates: int = Field(1, ge=1, le=10_000)
    workers: int = Field(1, ge=1, description="Thread-pool size for sweeps and cross-validation.")
    output_dir: Path = Field(Path("out"), description="Directory for generated files.")
    stage_split: float = Field(
        DEFAULT_STAGE_SPLIT, gt=0.0, lt=1.0, description="Fraction of training rows used for stage 1."
    )

    @field_validator("methods")
    @classmethod
    def methods_known(cls, methods: list[str]) -> list[str]:
        known = {m.value for m in Method}
        unknown = [m for m in methods if m not in known]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; expected some of {sorted(known)}")
        return methods

    @model_validator(mode="after")
    def grid_names_known(self) -> "ExperimentConfig":
        unknown = sorted(set(self.cv.grid) - set(HYPERPARAMETERS))
        if unknown:
            raise ValueError(f"cv.grid has unknown hyperparameters {unknown}; expected some of {list(HYPERPARAMETERS)}")
        return self


def load_config(path: Path | None = None) -> ExperimentConfig:
    """Load config from a TOML file, or return defaults if not found.

    Args:
        path: Path to bridgeshift.toml. If None, returns default ExperimentConfig.

    Returns:
        ExperimentConfig instance. Merges file values over defaults; validates via Pydantic.
    """
    if path is None:
        return ExperimentConfig()
    path = Path(path).resolve()
    if not path.exists():
        return ExperimentConfig()
    with path.open("rb") as f:
        raw = tomllib.load(f)
    return ExperimentConfig.model_validate(raw)


def config_to_toml(cfg: ExperimentConfig) -> str:
    """TOML text for ``cfg``; unset optional fields are omitted."""
    return tomli_w.dumps(cfg.model_dump(mode="json", exclude_none=True))


def dump_config(cfg: ExperimentConfig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(config_to_toml(cfg), encoding="utf-8")
    return path
