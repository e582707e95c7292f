"""Tests for the Frechet and Gaussian-linear partial-identification intervals."""

from __future__ import annotations

import numpy as np
import pytest

from core.datagen import random_gaussian_sem
from core.discrete import expected_outcome, frechet_bound, frechet_witness, gaussian_linear_bound, whitened_bridge
from core.errors import DataError

H0 = np.array([[0.1, 0.4], [0.7, 0.9]])


# --- Frechet ---


def test_frechet_interval_endpoints() -> None:
    bound = frechet_bound(H0, pi_c=0.3, pi_w=0.6)
    assert bound.q11_lower == pytest.approx(0.0)
    assert bound.q11_upper == pytest.approx(0.3)
    assert bound.coefficient == pytest.approx(0.1 - 0.7 - 0.4 + 0.9)
    assert bound.lower <= bound.upper
    assert bound.width == pytest.approx(abs(bound.coefficient) * 0.3)


def test_endpoints_attained_by_witness_joints() -> None:
    bound = frechet_bound(H0, pi_c=0.3, pi_w=0.6)
    low = frechet_witness(0.3, 0.6, bound.q11_at_lower)
    high = frechet_witness(0.3, 0.6, bound.q11_at_upper)
    assert expected_outcome(H0, low) == pytest.approx(bound.lower, abs=1e-12)
    assert expected_outcome(H0, high) == pytest.approx(bound.upper, abs=1e-12)
    np.testing.assert_allclose(low.sum(axis=1), [0.4, 0.6])
    np.testing.assert_allclose(low.sum(axis=0), [0.7, 0.3])


def test_negative_coefficient_swaps_endpoints() -> None:
    h = np.array([[1.0, 0.0], [0.0, -1.0]])
    bound = frechet_bound(h, pi_c=0.5, pi_w=0.5)
    assert bound.coefficient < 0.0
    assert bound.q11_at_lower == pytest.approx(bound.q11_upper)
    assert bound.q11_at_upper == pytest.approx(bound.q11_lower)


def test_every_consistent_joint_lands_inside(rng: np.random.Generator) -> None:
    for _ in range(50):
        h = rng.standard_normal((2, 2))
        pi_c, pi_w = rng.random(2)
        bound = frechet_bound(h, pi_c, pi_w)
        for q11 in np.linspace(bound.q11_lower, bound.q11_upper, 7):
            assert bound.contains(expected_outcome(h, frechet_witness(pi_c, pi_w, q11)), tol=1e-10)


def test_every_consistent_joint_lands_inside_over_random_instances(rng: np.random.Generator) -> None:
    """q11 on a 1e-3 grid over its admissible range, for 1000 random tables and marginals."""
    for _ in range(1000):
        h = rng.uniform(-2.0, 2.0, size=(2, 2))
        pi_c, pi_w = rng.random(2)
        bound = frechet_bound(h, pi_c, pi_w)
        q11 = np.append(np.arange(bound.q11_lower, bound.q11_upper, 1e-3), bound.q11_upper)
        joints = np.stack(
            [
                np.stack([1.0 - pi_c - pi_w + q11, pi_c - q11], axis=-1),
                np.stack([pi_w - q11, q11], axis=-1),
            ],
            axis=-2,
        )
        assert np.all(joints >= -1e-12)
        values = np.einsum("wc,kwc->k", h, joints)
        assert np.all(values >= bound.lower - 1e-10)
        assert np.all(values <= bound.upper + 1e-10)
        assert values.min() == pytest.approx(bound.lower, abs=1e-10)
        assert values.max() == pytest.approx(bound.upper, abs=1e-10)


def test_degenerate_when_a_marginal_is_certain() -> None:
    assert frechet_bound(H0, pi_c=1.0, pi_w=0.4).is_degenerate


@pytest.mark.parametrize(("pi_c", "pi_w"), [(-0.1, 0.5), (0.5, 1.2)])
def test_frechet_rejects_bad_marginals(pi_c: float, pi_w: float) -> None:
    with pytest.raises(DataError, match="must be in \\[0, 1\\]"):
        frechet_bound(H0, pi_c, pi_w)


def test_frechet_needs_two_by_two() -> None:
    with pytest.raises(DataError, match="2x2"):
        frechet_bound(np.ones(3), 0.5, 0.5)


def test_witness_outside_range() -> None:
    with pytest.raises(DataError, match="admissible range"):
        frechet_witness(0.3, 0.6, 0.5)


# --- Gaussian-linear ---


def test_gaussian_bound_contains_true_target_value(rng: np.random.Generator) -> None:
    sem = random_gaussian_sem(rng)
    target = sem.with_sigma_u(2.0 * sem.sigma_u)
    for x in (np.zeros(2), np.array([0.5, -1.0])):
        m = target.conditional_moments(x)
        bound = gaussian_linear_bound(sem.H, m.mu_w, m.mu_c, m.sigma_w, m.sigma_c, rho=1.0)
        assert bound.contains(target.expected_y(x), tol=1e-8)
        assert bound.center == pytest.approx(float(m.mu_w @ sem.H @ m.mu_c))


def test_intervals_nest_as_rho_grows(rng: np.random.Generator) -> None:
    sem = random_gaussian_sem(rng)
    m = sem.conditional_moments(np.array([0.4, -0.2]))
    rhos = (0.1, 0.25, 0.5, 0.75, 1.0)
    bounds = [gaussian_linear_bound(sem.H, m.mu_w, m.mu_c, m.sigma_w, m.sigma_c, rho=rho) for rho in rhos]
    for smaller, larger in zip(bounds, bounds[1:]):
        assert larger.lower <= smaller.lower
        assert larger.upper >= smaller.upper
        assert larger.center == pytest.approx(smaller.center)
        assert larger.width > smaller.width


def test_bridge_expectation_matches_sem(rng: np.random.Generator) -> None:
    """E[W^T H C | x] with H = D^{-T} A equals E[Y | x]."""
    sem = random_gaussian_sem(rng)
    x = np.array([0.3, 0.2])
    assert sem.conditional_moments(x).expected_y(sem.H) == pytest.approx(sem.expected_y(x), rel=1e-8, abs=1e-10)


def test_half_width_is_rho_times_nuclear_norm() -> None:
    h = np.diag([2.0, 1.0])
    bound = gaussian_linear_bound(h, np.zeros(2), np.zeros(2), np.eye(2), 4.0 * np.eye(2), rho=0.5)
    np.testing.assert_allclose(bound.singular_values, [4.0, 2.0])
    assert bound.half_width == pytest.approx(3.0)
    assert (bound.lower, bound.upper) == pytest.approx((-3.0, 3.0))


def test_whitened_bridge_uses_symmetric_roots() -> None:
    out = whitened_bridge(np.eye(2), np.diag([4.0, 9.0]), np.eye(2))
    np.testing.assert_allclose(out, np.diag([2.0, 3.0]))


@pytest.mark.parametrize("rho", [0.0, 1.5])
def test_rho_range(rho: float) -> None:
    with pytest.raises(DataError, match="rho"):
        gaussian_linear_bound(np.eye(2), np.zeros(2), np.zeros(2), np.eye(2), np.eye(2), rho=rho)


def test_covariance_must_be_positive_definite() -> None:
    with pytest.raises(DataError, match="positive definite"):
        gaussian_linear_bound(np.eye(2), np.zeros(2), np.zeros(2), np.diag([1.0, 0.0]), np.eye(2), rho=1.0)


def test_shape_mismatch() -> None:
    with pytest.raises(DataError, match="H has shape"):
        gaussian_linear_bound(np.eye(2), np.zeros(3), np.zeros(2), np.eye(2), np.eye(2), rho=1.0)
