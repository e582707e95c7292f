"""Classification DGP with a binary latent U, a scalar proxy W, covariates X in R^2,
three binary concepts C and a binary label Y:

    U ~ Categorical(pi)
    W | u ~ N(o(u) M_W|U, 1)
    X | u ~ N(o(u) M_X|U, I_2)
    C_i | x, u ~ Bernoulli(expit([x M_C|X,u + o(u) M_C|U]_i))
    Y | c, u ~ Bernoulli(expit(c M_Y|C,u + o(u) M_Y|U))

o(u) is the one-hot row of u. The multi-domain variant reuses these equations and
withholds C.
"""

from __future__ import annotations

import numpy as np
from loguru import logger
from scipy.special import expit

from core.datagen.rng import stream
from core.datagen.specs import SPLITS, ConceptClassificationSpec, GeneratedData, MultiDomainClassificationSpec, Split
from core.models.batch import SampleBatch

M_W_GIVEN_U = np.array([-1.0, 1.0])
M_X_GIVEN_U = np.array([[-1.0, 1.0], [1.0, -1.0]])
M_C_GIVEN_U = np.array([[-2.0, 2.0, 2.0], [-1.0, 1.0, 2.0]])
M_C_GIVEN_XU = (
    3.0 * np.array([[-2.0, 2.0, -1.0], [1.0, -2.0, -3.0]]),
    3.0 * np.array([[2.0, -2.0, 1.0], [-1.0, 2.0, 3.0]]),
)
M_Y_GIVEN_U = np.array([2.0, 2.0])
M_Y_GIVEN_CU = (np.array([3.0, -2.0, -1.0]), np.array([3.0, -1.0, -2.0]))


def simulate_concept_rows(
    seed: int,
    key: tuple[str | int, ...],
    n: int,
    p_u1: float,
    a_w: float = 1.0,
) -> dict[str, np.ndarray]:
    """Draw n rows; returns U, W, X, C, Y arrays. ``key`` names the batch for stream splitting."""
    u = (stream(seed, *key, "U").random(n) < p_u1).astype(int)
    w = M_W_GIVEN_U[u] + stream(seed, *key, "W").standard_normal(n)
    x = a_w * M_X_GIVEN_U[u] + stream(seed, *key, "X").standard_normal((n, 2))

    c_logits = np.where(
        (u == 0)[:, None],
        x @ M_C_GIVEN_XU[0],
        x @ M_C_GIVEN_XU[1],
    ) + M_C_GIVEN_U[u]
    c = (stream(seed, *key, "C").random((n, 3)) < expit(c_logits)).astype(float)

    y_logits = np.where(u == 0, c @ M_Y_GIVEN_CU[0], c @ M_Y_GIVEN_CU[1]) + M_Y_GIVEN_U[u]
    y = (stream(seed, *key, "Y").random(n) < expit(y_logits)).astype(float)
    return {"U": u.astype(float), "W": w, "X": x, "C": c, "Y": y}


def _batch(rows: dict[str, np.ndarray], z: int, name: str, keep_c: bool = True) -> SampleBatch:
    cols = {k: v for k, v in rows.items() if keep_c or k != "C"}
    cols["Z"] = np.full(rows["Y"].shape[0], float(z))
    return SampleBatch(cols, name=name)


def gen_concept_classification(spec: ConceptClassificationSpec) -> GeneratedData:
    """Source domain z0 at P(U=1) = pi_u; target domain z1 at Q(U=1) = target_pi_u."""
    sizes = spec.sizes()

    def domain(label: str, z: int, p_u1: float) -> dict[Split, SampleBatch]:
        return {
            split: _batch(
                simulate_concept_rows(spec.seed, (spec.kind, label, split), sizes[split], p_u1, spec.a_w),
                z,
                f"{label}:{split}",
            )
            for split in SPLITS
        }

    data = GeneratedData(
        scenario=spec.kind,
        sources={0: domain("z0", 0, spec.pi_u)},
        target=domain("target", 1, spec.target_pi_u),
        target_domain=1,
    )
    logger.info(
        "Generated {} pi_u={} target_pi_u={} a_w={} sizes={}",
        spec.kind,
        spec.pi_u,
        spec.target_pi_u,
        spec.a_w,
        sizes,
    )
    return data


def gen_multidomain_classification(spec: MultiDomainClassificationSpec) -> GeneratedData:
    """One source domain per prior P(U=0); the target gets Q(U=0). C is withheld everywhere."""
    priors, target_prior = spec.priors()
    sizes = spec.sizes()

    def domain(label: str, z: int, p_u0: float, train_size: int) -> dict[Split, SampleBatch]:
        n = {**sizes, "train": train_size}
        return {
            split: _batch(
                simulate_concept_rows(spec.seed, (spec.kind, label, split), n[split], 1.0 - p_u0, spec.a_w),
                z,
                f"{label}:{split}",
                keep_c=False,
            )
            for split in SPLITS
        }

    sources = {z: domain(f"z{z}", z, p, spec.n_train) for z, p in enumerate(priors)}
    k = len(priors)
    data = GeneratedData(
        scenario=spec.kind,
        sources=sources,
        target=domain("target", k, target_prior, spec.n_target_train),
        target_domain=k,
    )
    logger.info("Generated {} priors={} target={} sizes={}", spec.kind, priors, target_prior, sizes)
    return data
