"""Tests for the seeded data-generating processes."""

from __future__ import annotations

import numpy as np
import pytest
from pydantic import ValidationError

from core.datagen import (
    MULTIDOMAIN_TASKS,
    ConceptClassificationSpec,
    CosineCounterexampleSpec,
    GaussianLinearSemSpec,
    MultiDomainClassificationSpec,
    RegressionBernoulliSpec,
    RegressionBetaSpec,
    gen_cosine_counterexample,
    gen_gaussian_linear_sem,
    generate,
)
from core.datagen.rng import replicate_seed, stream
from core.datagen.specs import GeneratedData
from core.errors import DataError


# --- Streams ---


def test_streams_are_keyed() -> None:
    a = stream(1, "concept", "z0", "train", "X").random(3)
    b = stream(1, "concept", "z0", "train", "X").random(3)
    c = stream(1, "concept", "z0", "train", "W").random(3)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_replicate_seeds_differ() -> None:
    assert replicate_seed(0, 0) != replicate_seed(0, 1)
    assert replicate_seed(5, 2) == replicate_seed(5, 2)


# --- Concept classification ---


def test_concept_sizes_and_columns(small_concept_data: GeneratedData) -> None:
    train = small_concept_data.pooled("train")
    assert train.n == 120
    assert train.variables == ("X", "W", "C", "Y", "Z", "U")
    assert (train.dim("X"), train.dim("C")) == (2, 3)
    assert small_concept_data.target["test"].n == 80
    assert small_concept_data.target_domain == 1
    assert set(np.unique(train["Y"])) <= {0.0, 1.0}


def test_concept_is_deterministic(small_concept_data: GeneratedData) -> None:
    again = generate(ConceptClassificationSpec(seed=7, n_train=120, n_val=0, n_test=80))
    for (label, split, batch), (_, _, other) in zip(small_concept_data.batches(), again.batches()):
        for var in batch.variables:
            np.testing.assert_array_equal(batch[var], other[var], err_msg=f"{label}:{split}:{var}")


def test_split_size_change_leaves_other_splits_alone() -> None:
    base = generate(ConceptClassificationSpec(seed=2, n_train=30, n_val=0, n_test=10))
    grown = generate(ConceptClassificationSpec(seed=2, n_train=30, n_val=0, n_test=50))
    np.testing.assert_array_equal(base.pooled("train")["W"], grown.pooled("train")["W"])


def test_empty_split_is_allowed() -> None:
    data = generate(ConceptClassificationSpec(seed=1, n_train=5, n_val=0, n_test=0))
    assert data.target["test"].n == 0
    assert data.target["val"].variables == ("X", "W", "C", "Y", "Z", "U")


def test_concept_shift_moves_latent_prior() -> None:
    spec = ConceptClassificationSpec(seed=4, n_train=10, n_val=0, n_test=3000, target_pi_u=0.1)
    low = generate(spec).target["test"]["U"].mean()
    high = generate(spec.with_shift(0.9)).target["test"]["U"].mean()
    assert low == pytest.approx(0.1, abs=0.03)
    assert high == pytest.approx(0.9, abs=0.03)


# --- Multi-domain classification ---


def test_multidomain_withholds_concepts(small_multidomain_data: GeneratedData) -> None:
    train = small_multidomain_data.pooled("train")
    assert not train.has("C")
    assert train.n == 3 * 50
    assert small_multidomain_data.target["train"].n == 80
    np.testing.assert_array_equal(np.unique(train["Z"]), [0.0, 1.0, 2.0])
    assert small_multidomain_data.target_domain == 3


@pytest.mark.parametrize("task", [1, 2, 3])
def test_multidomain_task_priors(task: int) -> None:
    spec = MultiDomainClassificationSpec(task=task)
    assert spec.priors() == MULTIDOMAIN_TASKS[task]


def test_multidomain_defaults_to_task_one() -> None:
    assert MultiDomainClassificationSpec().priors() == MULTIDOMAIN_TASKS[1]


def test_explicit_priors_need_target() -> None:
    with pytest.raises(ValidationError, match="target_prior is required"):
        MultiDomainClassificationSpec(source_priors=(0.2, 0.4))
    spec = MultiDomainClassificationSpec(source_priors=(0.2, 0.4), target_prior=0.7)
    assert spec.priors() == ((0.2, 0.4), 0.7)


def test_multidomain_priors_are_p_u0() -> None:
    spec = MultiDomainClassificationSpec(
        seed=3, source_priors=(0.1, 0.9), target_prior=0.5, n_train=3000, n_val=0, n_test=0, n_target_train=0
    )
    data = generate(spec)
    assert data.sources[0]["train"]["U"].mean() == pytest.approx(0.9, abs=0.03)
    assert data.sources[1]["train"]["U"].mean() == pytest.approx(0.1, abs=0.03)


# --- Regression ---


def test_regression_bernoulli_outcome(small_regression_data: GeneratedData) -> None:
    train = small_regression_data.pooled("train")
    assert train.n == 2 * 60
    x, u, y = train["X"][:, 0], train["U"][:, 0], train["Y"][:, 0]
    np.testing.assert_allclose(y, np.where(u == 1.0, x, -x))
    assert np.all(np.abs(np.abs(train["W"][:, 0]) - 1.0) < 0.6)


def test_regression_bernoulli_shift() -> None:
    spec = RegressionBernoulliSpec(seed=1, n_train=5, n_val=0, n_test=5)
    assert spec.with_shift(0.3).target_a == 0.3


def test_regression_beta_outcome() -> None:
    data = generate(RegressionBetaSpec(seed=5, n_train=40, n_val=0, n_test=10))
    train = data.pooled("train")
    x, u, y = train["X"][:, 0], train["U"][:, 0], train["Y"][:, 0]
    np.testing.assert_allclose(y, (2.0 * u - 1.0) * x)
    assert np.all((u > 0.0) & (u < 1.0))


def test_regression_beta_shift_takes_pairs() -> None:
    spec = RegressionBetaSpec()
    assert spec.with_shift((1.0, 5.0)).target_ab == (1.0, 5.0)
    with pytest.raises(DataError, match="pairs"):
        spec.with_shift(0.5)


# --- Gaussian SEM ---


def test_gaussian_sem_dimensions() -> None:
    sem_data = gen_gaussian_linear_sem(GaussianLinearSemSpec(seed=2, d_u=3, d_x=2, d_c=4, n_train=20, n_test=5))
    train = sem_data.data.pooled("train")
    assert (train.dim("X"), train.dim("W"), train.dim("C"), train.dim("U")) == (2, 3, 4, 3)
    np.testing.assert_allclose(sem_data.target.sigma_u, 2.0 * sem_data.source.sigma_u)


def test_gaussian_sem_explicit_matrix_shape_checked() -> None:
    with pytest.raises(DataError, match="D must have shape"):
        gen_gaussian_linear_sem(GaussianLinearSemSpec(d_u=2, D=[[1.0]]))


def test_gaussian_sem_singular_d_rejected() -> None:
    with pytest.raises(DataError, match="singular"):
        gen_gaussian_linear_sem(GaussianLinearSemSpec(d_u=2, D=[[1.0, 1.0], [1.0, 1.0]]))


# --- Cosine counterexample ---


def test_cosine_residual_orthogonal_to_sources() -> None:
    tables = gen_cosine_counterexample(3)
    inner = tables.orthogonality()
    assert np.max(np.abs(inner[:3])) <= 1e-6
    assert inner[3] == pytest.approx(np.pi, rel=1e-6)


def test_cosine_densities_integrate_to_one() -> None:
    tables = gen_cosine_counterexample(CosineCounterexampleSpec(k_z=2, grid_size=2048))
    assert tables.densities.shape == (3, 2048)
    np.testing.assert_allclose(tables.mass(), 1.0, atol=1e-9)


def test_cosine_needs_a_domain() -> None:
    with pytest.raises(DataError, match="k_z must be >= 1"):
        gen_cosine_counterexample(0)


def test_cosine_is_not_a_sample_scenario() -> None:
    with pytest.raises(DataError, match="does not produce sample batches"):
        generate(CosineCounterexampleSpec())


# --- Moments ---


def _within_se(sample: np.ndarray, expected: float) -> bool:
    se = np.std(sample, ddof=1) / np.sqrt(sample.size)
    return abs(float(np.mean(sample)) - expected) <= 4.0 * se


def test_concept_proxy_and_covariate_means_by_latent() -> None:
    train = generate(ConceptClassificationSpec(seed=11, pi_u=0.5, n_train=5000, n_val=0, n_test=0)).sources[0]["train"]
    u = train["U"][:, 0]
    assert _within_se(u, 0.5)
    for value, w_mean, x_mean in ((0.0, -1.0, (-1.0, 1.0)), (1.0, 1.0, (1.0, -1.0))):
        rows = u == value
        assert _within_se(train["W"][rows, 0], w_mean)
        assert _within_se(train["X"][rows, 0], x_mean[0])
        assert _within_se(train["X"][rows, 1], x_mean[1])


def test_concept_all_latent_ones() -> None:
    train = generate(ConceptClassificationSpec(seed=2, pi_u=1.0, n_train=2000, n_val=0, n_test=0)).sources[0]["train"]
    assert np.all(train["U"] == 1.0)
    assert _within_se(train["W"][:, 0], 1.0)


def test_regression_beta_proxy_mean_follows_beta_mean() -> None:
    data = generate(RegressionBetaSpec(seed=13, n_train=5000, n_val=0, n_test=0))
    for z, (a, b) in enumerate(((2.0, 4.0), (4.0, 2.0))):
        train = data.sources[z]["train"]
        assert _within_se(train["U"][:, 0], a / (a + b))
        assert _within_se(train["W"][:, 0], 2.0 * a / (a + b) - 1.0)


def test_regression_bernoulli_balanced_target_has_no_linear_signal() -> None:
    target = generate(RegressionBernoulliSpec(seed=17, target_a=0.5, n_train=5000, n_val=0, n_test=0)).target["train"]
    assert _within_se(target["X"][:, 0] * target["Y"][:, 0], 0.0)
