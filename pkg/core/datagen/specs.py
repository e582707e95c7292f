"""Data-generating process specs and the generated-data container.

Specs are Pydantic models discriminated by ``kind`` so a TOML ``[scenario]`` table
validates straight into the right generator. Sample sizes are per domain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.errors import DataError
from core.models.batch import SampleBatch

Split = Literal["train", "val", "test"]
SPLITS: tuple[Split, ...] = ("train", "val", "test")

# P(U=0) per source domain and the target Q(U=0) for the three multi-domain tasks.
MULTIDOMAIN_TASKS: dict[int, tuple[tuple[float, ...], float]] = {
    1: ((0.1, 0.2, 0.3), 0.9),
    2: ((0.4, 0.5, 0.6), 0.9),
    3: ((0.7, 0.8, 0.9), 0.4),
}

Probability = Annotated[float, Field(ge=0.0, le=1.0)]
Positive = Annotated[float, Field(gt=0.0)]


class _SpecBase(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    seed: int = Field(0, ge=0, description="Root seed; every column has its own stream under it.")
    n_train: int = Field(2000, ge=0)
    n_val: int = Field(0, ge=0)
    n_test: int = Field(1000, ge=0)

    def sizes(self) -> dict[Split, int]:
        return {"train": self.n_train, "val": self.n_val, "test": self.n_test}


class ConceptClassificationSpec(_SpecBase):
    """Binary U, scalar proxy W, 2-D covariates X, three binary concepts C, binary Y."""

    kind: Literal["concept_classification"] = "concept_classification"
    pi_u: Probability = Field(0.1, description="Source P(U=1).")
    target_pi_u: Probability = Field(0.9, description="Target Q(U=1).")
    a_w: Positive = Field(1.0, description="Scale of the X|U mean matrix.")
    n_train: int = Field(7000, ge=0)
    n_val: int = Field(1000, ge=0)
    n_test: int = Field(2000, ge=0)

    def with_shift(self, value: float) -> "ConceptClassificationSpec":
        return self.model_copy(update={"target_pi_u": float(value)})


class MultiDomainClassificationSpec(_SpecBase):
    """Concept DGP with C withheld, several source domains differing in P(U)."""

    kind: Literal["multidomain_classification"] = "multidomain_classification"
    task: Literal[1, 2, 3] | None = Field(
        None, description="Preset priors; ignored when source_priors is set. Unset means task 1."
    )
    source_priors: tuple[Probability, ...] | None = Field(None, description="P(U=0) per source domain.")
    target_prior: Probability | None = Field(None, description="Target Q(U=0); defaults to the task's.")
    a_w: Positive = 1.0
    n_train: int = Field(3200, ge=0)
    n_val: int = Field(800, ge=0)
    n_test: int = Field(2000, ge=0)
    n_target_train: int = Field(9600, ge=0, description="Labelled target rows (ORACLE and target embeddings).")

    @model_validator(mode="after")
    def priors_resolvable(self) -> "MultiDomainClassificationSpec":
        if self.source_priors is not None and len(self.source_priors) < 1:
            raise ValueError("source_priors must list at least one domain")
        if self.source_priors is not None and self.target_prior is None and self.task is None:
            raise ValueError("target_prior is required with explicit source_priors and no task")
        return self

    def priors(self) -> tuple[tuple[float, ...], float]:
        preset = MULTIDOMAIN_TASKS[self.task if self.task is not None else 1]
        sources = self.source_priors if self.source_priors is not None else preset[0]
        target = self.target_prior if self.target_prior is not None else preset[1]
        return tuple(sources), float(target)

    def with_shift(self, value: float) -> "MultiDomainClassificationSpec":
        return self.model_copy(update={"target_prior": float(value)})


class RegressionBernoulliSpec(_SpecBase):
    """U ~ Bernoulli(a), X ~ N(0, 1), Y = +-X by U, W ~ N(+-1, 0.01)."""

    kind: Literal["regression_bernoulli"] = "regression_bernoulli"
    source_a: tuple[Probability, ...] = Field((0.1, 0.9), min_length=1)
    target_a: Probability = 0.5

    def with_shift(self, value: float) -> "RegressionBernoulliSpec":
        return self.model_copy(update={"target_a": float(value)})


class RegressionBetaSpec(_SpecBase):
    """U ~ Beta(a, b), X ~ N(0, 1), Y = (2U - 1) X, W mixes N(-1, 0.01) and N(1, 0.01) by U."""

    kind: Literal["regression_beta"] = "regression_beta"
    source_ab: tuple[tuple[Positive, Positive], ...] = Field(((2.0, 4.0), (4.0, 2.0)), min_length=1)
    target_ab: tuple[Positive, Positive] = (3.0, 3.0)

    def with_shift(self, value: float | tuple[float, float]) -> "RegressionBetaSpec":
        if isinstance(value, (int, float)):
            raise DataError("regression_beta shifts are (a, b) pairs")
        a, b = value
        return self.model_copy(update={"target_ab": (float(a), float(b))})


class GaussianLinearSemSpec(_SpecBase):
    """Linear-Gaussian SEM; unset matrices are drawn at random from ``seed``."""

    kind: Literal["gaussian_linear_sem"] = "gaussian_linear_sem"
    d_u: int = Field(2, ge=1)
    d_x: int = Field(2, ge=1)
    d_c: int = Field(2, ge=1)
    E: list[list[float]] | None = None
    D: list[list[float]] | None = None
    F: list[list[float]] | None = None
    G: list[list[float]] | None = None
    A: list[list[float]] | None = None
    sigma_u: list[list[float]] | None = None
    noise_var: Positive = Field(0.25, description="Isotropic variance of the X, W, C noises.")
    y_noise_var: Positive = 0.1
    target_sigma_u_scale: Positive = Field(2.0, description="Target Sigma_U = scale * source Sigma_U.")

    def with_shift(self, value: float) -> "GaussianLinearSemSpec":
        return self.model_copy(update={"target_sigma_u_scale": float(value)})


class CosineCounterexampleSpec(_SpecBase):
    """Densities (1 + cos(r u)) / (2 pi) on a grid over [-pi, pi], r = 1..k_z."""

    kind: Literal["cosine_counterexample"] = "cosine_counterexample"
    k_z: int = Field(3, ge=1)
    grid_size: int = Field(4096, ge=16)

    def with_shift(self, value: float) -> "CosineCounterexampleSpec":
        return self.model_copy(update={"k_z": int(value)})


DgpSpec = Annotated[
    Union[
        ConceptClassificationSpec,
        MultiDomainClassificationSpec,
        RegressionBernoulliSpec,
        RegressionBetaSpec,
        GaussianLinearSemSpec,
        CosineCounterexampleSpec,
    ],
    Field(discriminator="kind"),
]


@dataclass(frozen=True, eq=False)
class GeneratedData:
    """Per-domain split batches. Source domains are 0..k-1; the target is ``target_domain``."""

    scenario: str
    sources: dict[int, dict[Split, SampleBatch]]
    target: dict[Split, SampleBatch]
    target_domain: int

    def pooled(self, split: Split) -> SampleBatch:
        """All source domains stacked for one split (Z carries the domain index)."""
        return SampleBatch.concat(
            [parts[split] for _, parts in sorted(self.sources.items())],
            name=f"{self.scenario}:sources:{split}",
        )

    def batches(self) -> list[tuple[str, Split, SampleBatch]]:
        """(domain label, split, batch) in file order: sources by index, then target."""
        out: list[tuple[str, Split, SampleBatch]] = []
        for z, parts in sorted(self.sources.items()):
            out.extend((f"z{z}", split, parts[split]) for split in SPLITS)
        out.extend(("target", split, self.target[split]) for split in SPLITS)
        return out
