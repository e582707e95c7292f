"""Shared pytest fixtures for BridgeShift tests.

Seeded generators, small synthetic batches and kernel sets. Sizes are kept small so
the whole default suite runs in seconds; statistical replicas live in tests/acceptance.
"""

from __future__ import annotations

from collections.abc import Callable, Iterator
from pathlib import Path

import numpy as np
import pytest
from loguru import logger

from core.datagen import ConceptClassificationSpec, MultiDomainClassificationSpec, RegressionBernoulliSpec, generate
from core.datagen.specs import GeneratedData
from core.models.batch import SampleBatch
from core.models.kernels import BinaryKernel, GaussianKernel, KernelSet


# --- Random generators ---


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded Philox generator; same stream in every test."""
    return np.random.Generator(np.random.Philox(12345))


# --- Kernel sets ---


@pytest.fixture
def gaussian_kernels() -> KernelSet:
    """Unit-scale Gaussian kernels on X, W, C and a Binary kernel on Z."""
    return KernelSet(
        x=GaussianKernel(length_scale=1.0),
        w=GaussianKernel(length_scale=1.0),
        c=GaussianKernel(length_scale=1.0),
        z=BinaryKernel(),
    )


# --- Small batches ---


@pytest.fixture
def concept_batch(rng: np.random.Generator) -> SampleBatch:
    """60 rows of (X, W, C, Y) with Y driven by W and C."""
    n = 60
    u = rng.integers(0, 2, n).astype(float)
    x = rng.standard_normal((n, 2)) + u[:, None]
    w = u + 0.3 * rng.standard_normal(n)
    c = (rng.random((n, 2)) < 0.3 + 0.4 * u[:, None]).astype(float)
    y = w + c.sum(axis=1) + 0.1 * rng.standard_normal(n)
    return SampleBatch.from_arrays("concept", X=x, W=w, C=c, Y=y)


@pytest.fixture
def multidomain_batch(rng: np.random.Generator) -> SampleBatch:
    """Three domains x 20 rows of (X, W, Y, Z)."""
    parts = []
    for z, p in enumerate((0.2, 0.5, 0.8)):
        u = (rng.random(20) < p).astype(float)
        x = rng.standard_normal(20)
        w = 2.0 * u - 1.0 + 0.1 * rng.standard_normal(20)
        y = np.where(u == 1.0, x, -x)
        parts.append(SampleBatch.from_arrays(f"z{z}", X=x, W=w, Y=y, Z=np.full(20, float(z))))
    return SampleBatch.concat(parts, name="multidomain")


# --- Generated scenarios ---


@pytest.fixture
def small_concept_data() -> GeneratedData:
    """Concept classification DGP at toy sizes."""
    spec = ConceptClassificationSpec(seed=7, n_train=120, n_val=0, n_test=80)
    return generate(spec)


@pytest.fixture
def small_multidomain_data() -> GeneratedData:
    """Multi-domain classification task 1 at toy sizes."""
    spec = MultiDomainClassificationSpec(seed=7, n_train=50, n_val=0, n_test=60, n_target_train=80)
    return generate(spec)


@pytest.fixture
def small_regression_data() -> GeneratedData:
    spec = RegressionBernoulliSpec(seed=3, n_train=60, n_val=0, n_test=40)
    return generate(spec)


# --- Log capture ---


@pytest.fixture
def log_messages() -> Iterator[list[str]]:
    """Formatted loguru messages emitted during the test (WARNING and above)."""
    messages: list[str] = []
    handler_id = logger.add(lambda m: messages.append(m.record["message"]), level="WARNING")
    yield messages
    logger.remove(handler_id)


# --- Temp file fixtures ---


@pytest.fixture
def toml_factory(tmp_path: Path) -> Callable[[str], Path]:
    """Return a callable that writes TOML text to a fresh file and returns its path."""
    counter = 0

    def factory(text: str) -> Path:
        nonlocal counter
        counter += 1
        path = tmp_path / f"bridgeshift_{counter}.toml"
        path.write_text(text, encoding="utf-8")
        return path

    return factory
