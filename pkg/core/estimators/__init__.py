"""Kernel bridge estimators: conditional mean embeddings, h0 (concepts), m0 (multi-domain)."""

from core.estimators.base import BaseBridge, BridgeSummary
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
from core.estimators.concept import (
    BridgeH0,
    classify,
    fit_h0,
    fit_h0_from_cme,
    fit_h0_multilabel,
    h0_inner_with_cme,
    predict_full_adaptation,
    predict_scores,
)
from core.estimators.multidomain import (
    BridgeM0,
    DoubleCmeOperator,
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

__all__ = [
    "BaseBridge",
    "BridgeH0",
    "BridgeM0",
    "BridgeSummary",
    "CmeEstimator",
    "CmePattern",
    "DoubleCmeOperator",
    "PerDomainCme",
    "classify",
    "classify_multidomain",
    "fit_cme_joint_wc_given_x",
    "fit_cme_per_domain",
    "fit_cme_w_given_cx",
    "fit_cme_w_given_x",
    "fit_cme_w_given_xz",
    "fit_double_cme",
    "fit_h0",
    "fit_h0_from_cme",
    "fit_h0_multilabel",
    "fit_m0",
    "fit_m0_from_cme",
    "fit_m0_multilabel",
    "fit_stage1_m0",
    "h0_inner_with_cme",
    "m0_inner_with_cme",
    "predict_full_adaptation",
    "predict_multidomain",
    "predict_partial_adaptation",
    "predict_scores",
    "predict_scores_multidomain",
]
