"""Multi-domain regression DGPs with scalar X, W, Y.

Both share X ~ N(0, 1) and proxy noises of variance 0.01 around -1 (U=0) and +1 (U=1).
"""

from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np
from loguru import logger

from core.datagen.rng import stream
from core.datagen.specs import SPLITS, GeneratedData, RegressionBernoulliSpec, RegressionBetaSpec, Split
from core.models.batch import SampleBatch

PROXY_SD = 0.1


def _rows_bernoulli(seed: int, key: tuple[str | int, ...], n: int, a: float) -> dict[str, np.ndarray]:
    u = (stream(seed, *key, "U").random(n) < a).astype(float)
    x = stream(seed, *key, "X").standard_normal(n)
    y = np.where(u == 1.0, x, -x)
    w = np.where(u == 1.0, 1.0, -1.0) + PROXY_SD * stream(seed, *key, "W").standard_normal(n)
    return {"U": u, "X": x, "W": w, "Y": y}


def _rows_beta(seed: int, key: tuple[str | int, ...], n: int, ab: tuple[float, float]) -> dict[str, np.ndarray]:
    u = stream(seed, *key, "U").beta(ab[0], ab[1], size=n)
    x = stream(seed, *key, "X").standard_normal(n)
    y = (2.0 * u - 1.0) * x
    noise = PROXY_SD * stream(seed, *key, "W").standard_normal((n, 2))
    w = (-1.0 + noise[:, 0]) * (1.0 - u) + (1.0 + noise[:, 1]) * u
    return {"U": u, "X": x, "W": w, "Y": y}


def _generate(
    kind: str,
    seed: int,
    sizes: dict[Split, int],
    source_params: Sequence[object],
    target_param: object,
    draw: Callable[..., dict[str, np.ndarray]],
) -> GeneratedData:
    def domain(label: str, z: int, param: object) -> dict[Split, SampleBatch]:
        out: dict[Split, SampleBatch] = {}
        for split in SPLITS:
            rows = draw(seed, (kind, label, split), sizes[split], param)
            rows["Z"] = np.full(sizes[split], float(z))
            out[split] = SampleBatch(rows, name=f"{label}:{split}")
        return out

    k = len(source_params)
    data = GeneratedData(
        scenario=kind,
        sources={z: domain(f"z{z}", z, p) for z, p in enumerate(source_params)},
        target=domain("target", k, target_param),
        target_domain=k,
    )
    logger.info("Generated {} sources={} target={} sizes={}", kind, list(source_params), target_param, sizes)
    return data


def gen_regression_bernoulli(spec: RegressionBernoulliSpec) -> GeneratedData:
    """Y = -X when U=0 and +X when U=1, U ~ Bernoulli(a) per domain."""
    return _generate(spec.kind, spec.seed, spec.sizes(), spec.source_a, spec.target_a, _rows_bernoulli)


def gen_regression_beta(spec: RegressionBetaSpec) -> GeneratedData:
    """Y = (2U - 1) X with U ~ Beta(a, b) per domain."""
    return _generate(spec.kind, spec.seed, spec.sizes(), spec.source_ab, spec.target_ab, _rows_beta)
