"""Seeded synthetic data-generating processes."""

from __future__ import annotations

from core.datagen.concept import gen_concept_classification, gen_multidomain_classification
from core.datagen.cosine import CosineTables, gen_cosine_counterexample
from core.datagen.gaussian_sem import (
    ConditionalMoments,
    GaussianSem,
    SemData,
    gen_gaussian_linear_sem,
    random_gaussian_sem,
)
from core.datagen.regression import gen_regression_beta, gen_regression_bernoulli
from core.datagen.specs import (
    MULTIDOMAIN_TASKS,
    SPLITS,
    ConceptClassificationSpec,
    CosineCounterexampleSpec,
    DgpSpec,
    GaussianLinearSemSpec,
    GeneratedData,
    MultiDomainClassificationSpec,
    RegressionBernoulliSpec,
    RegressionBetaSpec,
)
from core.errors import DataError


def generate(spec: DgpSpec) -> GeneratedData:
    """Batches for any sample-based scenario (everything but the cosine tables)."""
    match spec:
        case ConceptClassificationSpec():
            return gen_concept_classification(spec)
        case MultiDomainClassificationSpec():
            return gen_multidomain_classification(spec)
        case RegressionBernoulliSpec():
            return gen_regression_bernoulli(spec)
        case RegressionBetaSpec():
            return gen_regression_beta(spec)
        case GaussianLinearSemSpec():
            return gen_gaussian_linear_sem(spec).data
    raise DataError(f"scenario {spec.kind!r} does not produce sample batches")


__all__ = [
    "MULTIDOMAIN_TASKS",
    "SPLITS",
    "ConceptClassificationSpec",
    "ConditionalMoments",
    "CosineCounterexampleSpec",
    "CosineTables",
    "DgpSpec",
    "GaussianLinearSemSpec",
    "GaussianSem",
    "GeneratedData",
    "MultiDomainClassificationSpec",
    "RegressionBernoulliSpec",
    "RegressionBetaSpec",
    "SemData",
    "gen_concept_classification",
    "gen_cosine_counterexample",
    "gen_gaussian_linear_sem",
    "gen_multidomain_classification",
    "gen_regression_bernoulli",
    "gen_regression_beta",
    "generate",
    "random_gaussian_sem",
]
