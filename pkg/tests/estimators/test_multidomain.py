"""Tests for the multi-domain bridge m0 and the double-CME operator."""

from __future__ import annotations

import numpy as np
import pytest

from core.errors import DataError, KernelMismatchError
from core.estimators.cme import PerDomainCme, fit_cme_joint_wc_given_x, fit_cme_w_given_x
from core.estimators.concept import fit_h0, fit_h0_multilabel
from core.estimators.multidomain import (
    classify_multidomain,
    fit_double_cme,
    fit_m0,
    fit_m0_from_cme,
    fit_m0_multilabel,
    fit_stage1_m0,
    m0_inner_with_cme,
    predict_multidomain,
    predict_partial_adaptation,
    predict_scores_multidomain,
)
from core.linalg.gram import gram
from core.models.batch import SampleBatch
from core.models.kernels import GaussianKernel, KernelSet

LAM3, LAM4 = 0.01, 0.001


@pytest.fixture
def md_stages(multidomain_batch: SampleBatch) -> tuple[SampleBatch, SampleBatch]:
    return multidomain_batch.split(0.5, seed=2)


@pytest.fixture
def target_batch(rng: np.random.Generator) -> SampleBatch:
    u = (rng.random(40) < 0.9).astype(float)
    x = rng.standard_normal(40)
    return SampleBatch.from_arrays("target", X=x, W=2.0 * u - 1.0 + 0.1 * rng.standard_normal(40))


# --- m0 ---


def test_per_domain_and_pooled_paths_agree(
    md_stages: tuple[SampleBatch, SampleBatch], gaussian_kernels: KernelSet
) -> None:
    stage1, stage2 = md_stages
    pooled = fit_m0(stage1, stage2, gaussian_kernels, LAM3, LAM4, per_domain=False)
    blocks = fit_m0(stage1, stage2, gaussian_kernels, LAM3, LAM4, per_domain=True)
    np.testing.assert_allclose(blocks.alpha, pooled.alpha, rtol=1e-6, atol=1e-9)


def test_default_path_is_per_domain_for_binary_z(
    md_stages: tuple[SampleBatch, SampleBatch], gaussian_kernels: KernelSet
) -> None:
    assert isinstance(fit_stage1_m0(md_stages[0], gaussian_kernels, LAM3), PerDomainCme)


def test_m0_closed_form(md_stages: tuple[SampleBatch, SampleBatch], gaussian_kernels: KernelSet) -> None:
    stage1, stage2 = md_stages
    cme3 = fit_stage1_m0(stage1, gaussian_kernels, LAM3, per_domain=False)
    bridge = fit_m0_from_cme(cme3, stage2, LAM4)
    gamma = cme3.weights(stage2.select("X", "Z"))
    sigma = (gamma.T @ gram(gaussian_kernels.get("W"), stage1["W"]) @ gamma) * gram(
        gaussian_kernels.get("X"), stage2["X"]
    )
    u = np.linalg.solve(sigma + LAM4 * stage2.n * np.eye(stage2.n), stage2["Y"][:, 0])
    np.testing.assert_allclose(bridge.u, u, rtol=1e-6, atol=1e-10)
    assert bridge.kind == "m0"
    assert bridge.lambdas == (LAM3, LAM4)


def test_m0_needs_single_y_column(md_stages: tuple[SampleBatch, SampleBatch], gaussian_kernels: KernelSet) -> None:
    stage1, stage2 = md_stages
    two = stage2.with_columns(Y=np.column_stack([stage2["Y"], stage2["Y"]]))
    with pytest.raises(DataError, match="single column"):
        fit_m0(stage1, two, gaussian_kernels, LAM3, LAM4)


def test_predict_multidomain_formula(
    md_stages: tuple[SampleBatch, SampleBatch], target_batch: SampleBatch, gaussian_kernels: KernelSet
) -> None:
    """y(x) = sum_t omega_t(x) m0(w_t, x)."""
    bridge = fit_m0(*md_stages, gaussian_kernels, LAM3, LAM4)
    target_cme = fit_cme_w_given_x(target_batch, gaussian_kernels, 0.01)
    x_new = target_batch["X"][:5]
    omega = target_cme.weights({"X": x_new})
    expected = [
        omega[:, t] @ bridge.evaluate(target_batch["W"], np.repeat(x_new[[t]], target_batch.n, axis=0))
        for t in range(5)
    ]
    np.testing.assert_allclose(predict_multidomain(bridge, target_cme, x_new), expected, rtol=1e-8, atol=1e-12)


def test_multilabel_classify(
    md_stages: tuple[SampleBatch, SampleBatch], target_batch: SampleBatch, gaussian_kernels: KernelSet
) -> None:
    stage1, stage2 = md_stages
    labelled = stage2.with_columns(Y=(stage2["Y"][:, 0] > 0.0).astype(float))
    bridges = fit_m0_multilabel(stage1, labelled, gaussian_kernels, LAM3, LAM4)
    target_cme = fit_cme_w_given_x(target_batch, gaussian_kernels, 0.01)
    scores = predict_scores_multidomain(bridges, target_cme, target_batch["X"])
    assert [b.label for b in bridges] == [0.0, 1.0]
    np.testing.assert_array_equal(
        classify_multidomain(bridges, target_cme, target_batch["X"]), np.argmax(scores, axis=0)
    )


def test_target_embedding_must_be_w_given_x(
    md_stages: tuple[SampleBatch, SampleBatch], concept_batch: SampleBatch, gaussian_kernels: KernelSet
) -> None:
    bridge = fit_m0(*md_stages, gaussian_kernels, LAM3, LAM4)
    joint = fit_cme_joint_wc_given_x(concept_batch, gaussian_kernels, 0.01)
    with pytest.raises(DataError, match="W_given_X"):
        predict_multidomain(bridge, joint, concept_batch["X"])


def test_source_inner_product_per_domain(
    md_stages: tuple[SampleBatch, SampleBatch], gaussian_kernels: KernelSet
) -> None:
    stage1, stage2 = md_stages
    cme3 = fit_stage1_m0(stage1, gaussian_kernels, LAM3)
    bridge = fit_m0_from_cme(cme3, stage2, LAM4)
    x, z = stage2["X"][:3], stage2["Z"][:3]
    b = cme3.weights({"X": x, "Z": z})
    expected = [b[:, t] @ bridge.evaluate(stage1["W"], np.repeat(x[[t]], stage1.n, axis=0)) for t in range(3)]
    np.testing.assert_allclose(m0_inner_with_cme(bridge, x, z, cme3), expected, rtol=1e-8, atol=1e-12)


# --- Double CME ---


@pytest.fixture
def concept_stages(concept_batch: SampleBatch) -> tuple[SampleBatch, SampleBatch]:
    return concept_batch.split(0.5, seed=5)


def test_double_cme_k_tilde(concept_stages: tuple[SampleBatch, SampleBatch], gaussian_kernels: KernelSet) -> None:
    """K~ = K_X4 * (D4^T K_W3 D4) with D4 the stage-3 weights at the stage-4 covariates."""
    stage3, stage4 = concept_stages
    op = fit_double_cme(stage3, stage4, gaussian_kernels, LAM3, LAM4)
    d4 = fit_cme_w_given_x(stage3, gaussian_kernels, LAM3).weights(stage4.select("X"))
    k_w3 = gram(gaussian_kernels.get("W"), stage3["W"])
    expected = gram(gaussian_kernels.get("X"), stage4["X"]) * (d4.T @ k_w3 @ d4)
    np.testing.assert_allclose(op.k_tilde, expected, rtol=1e-10, atol=1e-14)
    assert op.n4 == stage4.n
    assert op.lambdas == (LAM3, LAM4)


def test_partial_adaptation_shape_and_finiteness(
    concept_stages: tuple[SampleBatch, SampleBatch], concept_batch: SampleBatch, gaussian_kernels: KernelSet
) -> None:
    stage1, stage2 = concept_stages
    bridge = fit_h0(stage1, stage2, gaussian_kernels, LAM3, LAM4)
    op = fit_double_cme(stage1, stage2, gaussian_kernels, LAM3, LAM4)
    target_cme = fit_cme_w_given_x(concept_batch, gaussian_kernels, 0.01)
    preds = predict_partial_adaptation(bridge, op, target_cme, concept_batch["X"][:9])
    assert preds.shape == (9,)
    assert np.all(np.isfinite(preds))


def test_partial_adaptation_formula(
    concept_stages: tuple[SampleBatch, SampleBatch], concept_batch: SampleBatch, gaussian_kernels: KernelSet
) -> None:
    """<h0, nu (x) sum_j beta_j phi(c4_j)> = sum_{t,j} omega_t beta_j h0(w_t, c4_j)."""
    stage1, stage2 = concept_stages
    bridge = fit_h0(stage1, stage2, gaussian_kernels, LAM3, LAM4)
    op = fit_double_cme(stage1, stage2, gaussian_kernels, LAM3, LAM4)
    target_cme = fit_cme_w_given_x(concept_batch, gaussian_kernels, 0.01)
    x_new = concept_batch["X"][:2]
    omega = target_cme.weights({"X": x_new})
    beta = op.concept_weights(target_cme, x_new)
    phi_w = gram(bridge.w_kernel, bridge.anchors_w, concept_batch["W"])
    phi_c = gram(bridge.c_kernel, bridge.anchors_c, op.anchors_c)
    h_table = phi_w.T @ bridge.alpha @ phi_c  # h0(w_t, c4_j)
    expected = [omega[:, t] @ h_table @ beta[:, t] for t in range(2)]
    np.testing.assert_allclose(
        predict_partial_adaptation(bridge, op, target_cme, x_new), expected, rtol=1e-8, atol=1e-12
    )


def test_partial_adaptation_multilabel_rows(
    concept_stages: tuple[SampleBatch, SampleBatch], concept_batch: SampleBatch, gaussian_kernels: KernelSet
) -> None:
    stage1, stage2 = concept_stages
    labelled = stage2.with_columns(Y=(stage2["Y"][:, 0] > np.median(stage2["Y"])).astype(float))
    bridges = fit_h0_multilabel(stage1, labelled, gaussian_kernels, LAM3, LAM4)
    op = fit_double_cme(stage1, labelled, gaussian_kernels, LAM3, LAM4)
    target_cme = fit_cme_w_given_x(concept_batch, gaussian_kernels, 0.01)
    rows = [predict_partial_adaptation(b, op, target_cme, concept_batch["X"]) for b in bridges]
    assert all(r.shape == (concept_batch.n,) for r in rows)


def test_partial_adaptation_kernel_mismatch(
    concept_stages: tuple[SampleBatch, SampleBatch], concept_batch: SampleBatch, gaussian_kernels: KernelSet
) -> None:
    stage1, stage2 = concept_stages
    bridge = fit_h0(stage1, stage2, gaussian_kernels, LAM3, LAM4)
    other = gaussian_kernels.model_copy(update={"c": GaussianKernel(length_scale=5.0)})
    op = fit_double_cme(stage1, stage2, other, LAM3, LAM4)
    target_cme = fit_cme_w_given_x(concept_batch, gaussian_kernels, 0.01)
    with pytest.raises(KernelMismatchError, match="double CME C"):
        predict_partial_adaptation(bridge, op, target_cme, concept_batch["X"])


def test_double_cme_needs_concepts(
    concept_stages: tuple[SampleBatch, SampleBatch], gaussian_kernels: KernelSet
) -> None:
    stage3, stage4 = concept_stages
    with pytest.raises(DataError, match="missing column"):
        fit_double_cme(stage3, stage4.select("X", "W"), gaussian_kernels, LAM3, LAM4)
