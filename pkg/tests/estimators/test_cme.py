"""Tests for conditional mean embeddings."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
import pytest

from core.errors import DataError
from core.estimators.cme import (
    CmeEstimator,
    CmePattern,
    PerDomainCme,
    fit_cme_joint_wc_given_x,
    fit_cme_per_domain,
    fit_cme_w_given_cx,
    fit_cme_w_given_x,
    fit_cme_w_given_xz,
)
from core.linalg.gram import gram
from core.models.batch import SampleBatch
from core.models.kernels import KernelSet


# --- Weight form ---


def test_w_given_x_weights_closed_form(concept_batch: SampleBatch, gaussian_kernels: KernelSet) -> None:
    """b(x) = (K_X + lambda n I)^{-1} Phi_X(x)."""
    lam = 0.01
    cme = fit_cme_w_given_x(concept_batch, gaussian_kernels, lam)
    query = concept_batch["X"][:5]
    k_x = gram(gaussian_kernels.get("X"), concept_batch["X"])
    phi = gram(gaussian_kernels.get("X"), concept_batch["X"], query)
    expected = np.linalg.solve(k_x + lam * concept_batch.n * np.eye(concept_batch.n), phi)
    np.testing.assert_allclose(cme.weights({"X": query}), expected, rtol=1e-8, atol=1e-12)
    assert cme.pattern == CmePattern.W_GIVEN_X
    assert cme.embedded == ("W",)


def test_w_given_cx_uses_hadamard_of_x_and_c(concept_batch: SampleBatch, gaussian_kernels: KernelSet) -> None:
    lam = 0.05
    cme = fit_cme_w_given_cx(concept_batch, gaussian_kernels, lam)
    k = gram(gaussian_kernels.get("X"), concept_batch["X"]) * gram(gaussian_kernels.get("C"), concept_batch["C"])
    rhs = k[:, :3]
    expected = np.linalg.solve(k + lam * concept_batch.n * np.eye(concept_batch.n), rhs)
    np.testing.assert_allclose(cme.weights(concept_batch.take(range(3))), expected, rtol=1e-8, atol=1e-12)
    assert cme.conditioning == ("X", "C")


def test_joint_embedding_anchors_carry_w_and_c(concept_batch: SampleBatch, gaussian_kernels: KernelSet) -> None:
    cme = fit_cme_joint_wc_given_x(concept_batch, gaussian_kernels, 0.01)
    assert cme.anchors.variables == ("X", "W", "C")
    assert cme.weights({"X": concept_batch["X"]}).shape == (concept_batch.n, concept_batch.n)


def test_query_dimension_mismatch(concept_batch: SampleBatch, gaussian_kernels: KernelSet) -> None:
    cme = fit_cme_w_given_x(concept_batch, gaussian_kernels, 0.01)
    with pytest.raises(DataError, match="query X has 3 columns"):
        cme.weights({"X": np.zeros((2, 3))})


def test_lambda_must_be_positive(concept_batch: SampleBatch, gaussian_kernels: KernelSet) -> None:
    with pytest.raises(DataError, match="lambda must be positive"):
        fit_cme_w_given_x(concept_batch, gaussian_kernels, 0.0)


def test_missing_column(concept_batch: SampleBatch, gaussian_kernels: KernelSet) -> None:
    with pytest.raises(DataError, match="missing column"):
        fit_cme_w_given_cx(concept_batch.select("X", "W"), gaussian_kernels, 0.1)


def test_missing_kernel(concept_batch: SampleBatch) -> None:
    with pytest.raises(DataError, match="no kernel set"):
        fit_cme_w_given_x(concept_batch, KernelSet(), 0.1)


# --- Per-domain embeddings ---


def test_per_domain_matches_pooled_binary_z(multidomain_batch: SampleBatch, gaussian_kernels: KernelSet) -> None:
    """lambda_r = lambda n / n_r makes the per-domain blocks equal the pooled Binary-Z solve."""
    lam = 0.02
    pooled = fit_cme_w_given_xz(multidomain_batch, gaussian_kernels, lam)
    per_domain = PerDomainCme.fit(multidomain_batch, gaussian_kernels, lam)
    query = multidomain_batch.take([0, 25, 59]).select("X", "Z")
    np.testing.assert_allclose(per_domain.weights(query), pooled.weights(query), rtol=1e-7, atol=1e-10)


def test_per_domain_unknown_domain_gets_zero_weights(
    multidomain_batch: SampleBatch, gaussian_kernels: KernelSet
) -> None:
    per_domain = PerDomainCme.fit(multidomain_batch, gaussian_kernels, 0.02)
    weights = per_domain.weights({"X": np.zeros(2), "Z": np.array([7.0, 7.0])})
    assert weights.shape == (multidomain_batch.n, 2)
    assert np.all(weights == 0.0)


def test_fit_per_domain_lambda_count(multidomain_batch: SampleBatch, gaussian_kernels: KernelSet) -> None:
    parts = [part for _, part in multidomain_batch.domains()]
    with pytest.raises(DataError, match="3 domain batches but 2 lambdas"):
        fit_cme_per_domain(parts, gaussian_kernels, [0.1, 0.1])
    estimators = fit_cme_per_domain(parts, gaussian_kernels, 0.1)
    assert [e.domain for e in estimators] == [0, 1, 2]
    assert all(e.pattern == CmePattern.W_GIVEN_X_PER_DOMAIN for e in estimators)


# --- Equivariance ---


@pytest.mark.parametrize("fit", [fit_cme_w_given_x, fit_cme_w_given_cx, fit_cme_joint_wc_given_x])
def test_permuting_anchors_permutes_weights(
    fit: Callable[[SampleBatch, KernelSet, float], CmeEstimator],
    concept_batch: SampleBatch,
    gaussian_kernels: KernelSet,
    rng: np.random.Generator,
) -> None:
    perm = rng.permutation(concept_batch.n)
    query = concept_batch.take(range(4))
    plain = fit(concept_batch, gaussian_kernels, 0.01).weights(query)
    shuffled = fit(concept_batch.take(perm), gaussian_kernels, 0.01).weights(query)
    np.testing.assert_allclose(shuffled, plain[perm], rtol=1e-8, atol=1e-10)
