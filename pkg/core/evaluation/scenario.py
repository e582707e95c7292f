"""Scenario sweeps: generate data, fit every method, score it on the target test split.

One job per (shift value, replicate). Jobs run on a thread pool; the results
table is assembled in (shift, replicate, method, metric) order, so a sweep is a
pure function of its inputs.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property
from typing import Any

import numpy as np
import pandas as pd
from loguru import logger

from core.datagen import generate
from core.datagen.rng import replicate_seed
from core.datagen.specs import DgpSpec, GeneratedData, RegressionBetaSpec
from core.errors import BridgeShiftError, ConfigError, DataError
from core.estimators.cme import (
    CmeEstimator,
    PerDomainCme,
    fit_cme_joint_wc_given_x,
    fit_cme_w_given_cx,
    fit_cme_w_given_x,
)
from core.estimators.concept import BridgeH0, fit_h0_from_cme, h0_inner_with_cme, predict_full_adaptation
from core.estimators.multidomain import (
    BridgeM0,
    fit_m0_from_cme,
    fit_stage1_m0,
    m0_inner_with_cme,
    predict_multidomain,
)
from core.evaluation.baselines import fit_avg_erm_pooled, fit_covars, fit_erm, fit_labels
from core.evaluation.cv import CvPlan, select
from core.evaluation.metrics import Metric, score
from core.linalg.gram import KernelKind, resolve_kernels, with_length_scale
from core.models.batch import SampleBatch
from core.models.kernels import KernelSet

RESULT_COLUMNS = ("method", "scenario", "shift_param", "replicate", "metric_name", "value", "seed")
CLASSIFICATION_SCENARIOS = frozenset({"concept_classification", "multidomain_classification"})
HYPERPARAMETERS = ("lambda", "lambda1", "lambda2", "length_scale")
DEFAULT_LAMBDA = 1e-3
DEFAULT_STAGE_SPLIT = 0.5


class Method(StrEnum):
    PROPOSED_CONCEPT = "proposed-concept"
    PROPOSED_MULTIDOMAIN = "proposed-multidomain"
    ERM = "ERM"
    CAT_ERM = "Cat-ERM"
    AVG_ERM = "Avg-ERM"
    COVARS = "COVARS"
    LABELS = "LABELS"
    ORACLE = "ORACLE"


def is_classification(scenario: str) -> bool:
    return scenario in CLASSIFICATION_SCENARIOS


def metrics_for(scenario: str) -> tuple[Metric, ...]:
    return ("auroc", "accuracy") if is_classification(scenario) else ("mse",)


def shift_label(spec: DgpSpec) -> str:
    """The target-shift parameter of ``spec`` as written to the results table."""
    match spec.kind:
        case "concept_classification":
            value: Any = spec.target_pi_u
        case "multidomain_classification":
            value = spec.priors()[1]
        case "regression_bernoulli":
            value = spec.target_a
        case "regression_beta":
            value = spec.target_ab
        case "gaussian_linear_sem":
            value = spec.target_sigma_u_scale
        case _:
            value = getattr(spec, "k_z", "")
    if isinstance(value, tuple):
        return ":".join(f"{v:g}" for v in value)
    return f"{value:g}" if isinstance(value, float) else str(value)


# --- Fitted models ---


@dataclass(frozen=True, eq=False)
class ConceptAdapter:
    """h0 plus the source embedding (for source-side scores) and the target joint embedding."""

    bridge: BridgeH0
    cme1: CmeEstimator
    target_train: SampleBatch
    target_lam: float

    @cached_property
    def target_cme(self) -> CmeEstimator:
        return fit_cme_joint_wc_given_x(self.target_train, self.bridge.kernels, self.target_lam)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return predict_full_adaptation(self.bridge, self.target_cme, x)

    def predict_source(self, batch: SampleBatch) -> np.ndarray:
        return h0_inner_with_cme(self.bridge, batch["C"], batch["X"], self.cme1)


@dataclass(frozen=True, eq=False)
class MultiDomainAdapter:
    """m0 plus the stage-1 embedding and the target W|x embedding."""

    bridge: BridgeM0
    cme3: CmeEstimator | PerDomainCme
    target_train: SampleBatch
    target_lam: float

    @cached_property
    def target_cme(self) -> CmeEstimator:
        return fit_cme_w_given_x(self.target_train, self.bridge.kernels, self.target_lam)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return predict_multidomain(self.bridge, self.target_cme, x)

    def predict_source(self, batch: SampleBatch) -> np.ndarray:
        return m0_inner_with_cme(self.bridge, batch["X"], batch["Z"], self.cme3)


@dataclass(frozen=True, eq=False)
class BaselineModel:
    predictor: Any

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.predictor.predict(x)

    def predict_source(self, batch: SampleBatch) -> np.ndarray:
        return self.predictor.predict(batch["X"])


# --- Per-method fitting ---


@dataclass(frozen=True, eq=False)
class ScenarioContext:
    scenario: str
    data: GeneratedData
    kernels: KernelSet
    stage_split: float
    seed: int

    @cached_property
    def source_train(self) -> SampleBatch:
        return self.data.pooled("train")

    @property
    def target_train(self) -> SampleBatch:
        return self.data.target["train"]

    @property
    def target_test(self) -> SampleBatch:
        return self.data.target["test"]

    def kernels_for(self, params: Mapping[str, float]) -> KernelSet:
        scale = params.get("length_scale")
        if scale is None or self.kernels.x is None:
            return self.kernels
        return self.kernels.model_copy(update={"x": with_length_scale(self.kernels.x, float(scale))})


def _lam(params: Mapping[str, float], key: str) -> float:
    return float(params.get(key, params.get("lambda", DEFAULT_LAMBDA)))


def _fit_concept(ctx: ScenarioContext, params: Mapping[str, float], train: SampleBatch) -> ConceptAdapter:
    kernels = ctx.kernels_for(params)
    stage1, stage2 = train.split(ctx.stage_split, ctx.seed)
    cme1 = fit_cme_w_given_cx(stage1, kernels, _lam(params, "lambda1"))
    bridge = fit_h0_from_cme(cme1, stage2, _lam(params, "lambda2"))
    return ConceptAdapter(bridge, cme1, ctx.target_train, _lam(params, "lambda1"))


def _fit_multidomain(ctx: ScenarioContext, params: Mapping[str, float], train: SampleBatch) -> MultiDomainAdapter:
    kernels = ctx.kernels_for(params)
    stage1, stage2 = train.split(ctx.stage_split, ctx.seed)
    cme3 = fit_stage1_m0(stage1, kernels, _lam(params, "lambda1"))
    bridge = fit_m0_from_cme(cme3, stage2, _lam(params, "lambda2"))
    return MultiDomainAdapter(bridge, cme3, ctx.target_train, _lam(params, "lambda1"))


def _baseline(
    build: Callable[[ScenarioContext, KernelSet, float, SampleBatch], Any],
) -> Callable[[ScenarioContext, Mapping[str, float], SampleBatch], BaselineModel]:
    def fit(ctx: ScenarioContext, params: Mapping[str, float], train: SampleBatch) -> BaselineModel:
        kernels = ctx.kernels_for(params)
        return BaselineModel(build(ctx, kernels, _lam(params, "lambda"), train))

    return fit


_FITTERS: dict[Method, Callable[[ScenarioContext, Mapping[str, float], SampleBatch], Any]] = {
    Method.PROPOSED_CONCEPT: _fit_concept,
    Method.PROPOSED_MULTIDOMAIN: _fit_multidomain,
    Method.ERM: _baseline(lambda ctx, k, lam, train: fit_erm(train, k.get("X"), lam)),
    Method.CAT_ERM: _baseline(lambda ctx, k, lam, train: fit_erm(train, k.get("X"), lam)),
    Method.AVG_ERM: _baseline(lambda ctx, k, lam, train: fit_avg_erm_pooled(train, k.get("X"), lam)),
    Method.COVARS: _baseline(
        lambda ctx, k, lam, train: fit_covars(train, ctx.target_train["X"], k.get("X"), lam)
    ),
    Method.LABELS: _baseline(
        lambda ctx, k, lam, train: fit_labels(train, ctx.target_train["Y"], k.get("X"), lam)
    ),
}


def _oracle(ctx: ScenarioContext, params: Mapping[str, float], train: SampleBatch) -> Any:
    # Multi-domain classification: the m0 estimator itself, fitted on target data.
    if ctx.scenario == "multidomain_classification":
        return _fit_multidomain(ctx, params, train)
    return _FITTERS[Method.ERM](ctx, params, train)


def _skip_reason(method: Method, ctx: ScenarioContext) -> str | None:
    src, tgt = ctx.source_train, ctx.target_train
    if method is Method.PROPOSED_CONCEPT and not (src.has("W", "C", "X") and tgt.has("W", "C", "X")):
        return "needs W, C and X in source and target training data"
    if method is Method.PROPOSED_MULTIDOMAIN:
        if not (src.has("W", "X", "Z") and tgt.has("W", "X")):
            return "needs W, X and a domain index"
        if len(ctx.data.sources) < 2:
            return "needs at least two source domains"
    if method in (Method.ORACLE, Method.LABELS) and tgt.n == 0:
        return "needs labelled target training data"
    if method is Method.COVARS and tgt.n == 0:
        return "needs target covariates"
    return None


def plan_for(method: Method, scenario: str, plan: CvPlan) -> CvPlan:
    """The grid ``method`` searches.

    Two-stage methods use ``plan`` as given. Single-ridge methods search
    ``lambda`` and ``length_scale`` only, taking ``lambda2`` as their penalty
    when the grid has no plain ``lambda``.
    """
    two_stage = method in (Method.PROPOSED_CONCEPT, Method.PROPOSED_MULTIDOMAIN) or (
        method is Method.ORACLE and scenario == "multidomain_classification"
    )
    if two_stage:
        return plan
    grid = {k: v for k, v in plan.grid.items() if k in ("lambda", "length_scale")}
    if "lambda" not in grid and "lambda2" in plan.grid:
        grid = {"lambda": plan.grid["lambda2"], **grid}
    return plan.model_copy(update={"grid": grid or {"lambda": [DEFAULT_LAMBDA]}})


def _evaluate_method(
    method: Method,
    ctx: ScenarioContext,
    plan: CvPlan,
    metrics: tuple[Metric, ...],
) -> dict[Metric, float]:
    plan = plan_for(method, ctx.scenario, plan)
    fit = _oracle if method is Method.ORACLE else _FITTERS[method]
    train = ctx.target_train if method is Method.ORACLE else ctx.source_train
    cv_metric: Metric = plan.metric or metrics[0]

    def score_fn(model: Any, held_out: SampleBatch) -> float:
        return score(cv_metric, model.predict_source(held_out), held_out["Y"])

    model, _ = select(lambda params, batch: fit(ctx, params, batch), score_fn, train, plan, metric=cv_metric)
    preds = model.predict(ctx.target_test["X"])
    out: dict[Metric, float] = {}
    for metric in metrics:
        try:
            out[metric] = score(metric, preds, ctx.target_test["Y"])
        except DataError as exc:
            logger.warning("{} on {}: {} not computable ({})", method, ctx.scenario, metric, exc)
            out[metric] = float("nan")
    return out


@dataclass(frozen=True)
class SweepJob:
    spec: DgpSpec
    replicate: int
    seed: int


def _run_job(
    job: SweepJob,
    methods: Sequence[Method],
    plan: CvPlan,
    explicit: KernelSet | None,
    kernel_kinds: Mapping[str, KernelKind] | None,
    length_scales: Mapping[str, float] | None,
    stage_split: float,
) -> list[dict[str, Any]]:
    spec = job.spec.model_copy(update={"seed": job.seed})
    data = generate(spec)
    kernels = resolve_kernels(
        data.pooled("train"),
        explicit,
        kinds=kernel_kinds,
        length_scales=length_scales,
        scenario=spec.kind,
        seed=job.seed,
    )
    ctx = ScenarioContext(spec.kind, data, kernels, stage_split, job.seed)
    metrics = metrics_for(spec.kind)
    rows: list[dict[str, Any]] = []
    for method in methods:
        reason = _skip_reason(method, ctx)
        if reason is not None:
            logger.warning("Skipping {} on {}: {}", method, spec.kind, reason)
            continue
        try:
            values = _evaluate_method(method, ctx, plan, metrics)
        except BridgeShiftError as exc:
            logger.warning("{} failed on {} replicate {}: {}", method, spec.kind, job.replicate, exc)
            values = {m: float("nan") for m in metrics}
        rows.extend(
            {
                "method": str(method),
                "scenario": spec.kind,
                "shift_param": shift_label(spec),
                "replicate": job.replicate,
                "metric_name": metric,
                "value": values[metric],
                "seed": job.seed,
            }
            for metric in metrics
        )
    return rows


def parse_methods(methods: Sequence[str | Method]) -> list[Method]:
    out = []
    for m in methods:
        try:
            out.append(Method(m))
        except ValueError:
            raise ConfigError(
                f"unknown method {m!r}; expected one of {', '.join(x.value for x in Method)}"
            ) from None
    return out


def run_scenario(
    dgp: DgpSpec,
    methods: Sequence[str | Method],
    plan: CvPlan,
    *,
    shifts: Sequence[float | tuple[float, float]] | None = None,
    replicates: int = 1,
    seed: int = 0,
    stage_split: float = DEFAULT_STAGE_SPLIT,
    kernel_kinds: Mapping[str, KernelKind] | None = None,
    length_scales: Mapping[str, float] | None = None,
    kernels: KernelSet | None = None,
    workers: int = 1,
) -> pd.DataFrame:
    """Long-form results: one row per (shift, replicate, method, metric)."""
    chosen = parse_methods(methods)
    unknown = sorted(set(plan.grid) - set(HYPERPARAMETERS))
    if unknown:
        raise ConfigError(f"unknown hyperparameters {unknown}; expected a subset of {list(HYPERPARAMETERS)}")
    if replicates < 1:
        raise ConfigError(f"replicates must be >= 1 (got {replicates})")
    if dgp.kind == "cosine_counterexample":
        raise DataError("the cosine counterexample has no sample-based methods to sweep")
    if not chosen:
        return pd.DataFrame(columns=list(RESULT_COLUMNS))

    specs = [dgp] if shifts is None else [_shifted(dgp, v) for v in shifts]
    jobs = [
        SweepJob(spec=spec, replicate=r, seed=replicate_seed(seed, r))
        for spec in specs
        for r in range(replicates)
    ]
    rows: list[dict[str, Any]] = []
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [
            pool.submit(_run_job, job, chosen, plan, kernels, kernel_kinds, length_scales, stage_split) for job in jobs
        ]
        for i, future in enumerate(futures, start=1):
            rows.extend(future.result())
            logger.bind(event="progress", percent=round(100.0 * i / len(jobs), 1), current=i).info(
                "Sweep {}: {}/{} jobs", dgp.kind, i, len(jobs)
            )
    return pd.DataFrame(rows, columns=list(RESULT_COLUMNS))


def _shifted(dgp: DgpSpec, value: float | tuple[float, float]) -> DgpSpec:
    if isinstance(dgp, RegressionBetaSpec):
        return dgp.with_shift(tuple(value) if isinstance(value, (list, tuple)) else value)
    if isinstance(value, (list, tuple)):
        raise ConfigError(f"scenario {dgp.kind} takes scalar shift values (got {value!r})")
    return dgp.with_shift(float(value))


def summarize(results: pd.DataFrame) -> pd.DataFrame:
    """Mean and standard deviation over replicates per (method, shift, metric)."""
    if results.empty:
        return pd.DataFrame(columns=["method", "scenario", "shift_param", "metric_name", "mean", "std", "count"])
    grouped = results.groupby(["method", "scenario", "shift_param", "metric_name"], sort=False)["value"]
    return grouped.agg(["mean", "std", "count"]).reset_index()
