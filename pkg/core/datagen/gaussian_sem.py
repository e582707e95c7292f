"""Linear-Gaussian SEM with exact conditional moments.

    U ~ N(0, Sigma_U)
    X = E U + e_x        W = D U + e_w        C = F X + G U + e_c
    Y = U^T A C + e_y

The bridge h0(w, c) = w^T H c with H = D^{-T} A solves the bridge equation, and
E[Y | x] = mu_w^T H mu_c + tr(H^T Cov(W, C | x)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from loguru import logger
from scipy import linalg

from core.datagen.rng import stream
from core.datagen.specs import SPLITS, GaussianLinearSemSpec, GeneratedData, Split
from core.errors import DataError
from core.models.batch import SampleBatch

MAX_D_CONDITION = 1e8


@dataclass(frozen=True)
class ConditionalMoments:
    """Moments of (U, W, C) given X = x."""

    x: np.ndarray
    mu_u: np.ndarray
    mu_w: np.ndarray
    mu_c: np.ndarray
    sigma_w: np.ndarray
    sigma_c: np.ndarray
    sigma_wc: np.ndarray
    sigma_uc: np.ndarray

    def expected_y(self, h: np.ndarray) -> float:
        """E[W^T H C | x] for a bridge matrix H."""
        return float(self.mu_w @ h @ self.mu_c + np.trace(h.T @ self.sigma_wc))

    def correlation(self) -> np.ndarray:
        """R with Cov(W, C | x) = Sigma_W^{1/2} R Sigma_C^{1/2} (symmetric square roots)."""
        return _inv_sqrt(self.sigma_w) @ self.sigma_wc @ _inv_sqrt(self.sigma_c)


def _psd_power(matrix: np.ndarray, power: float, what: str) -> np.ndarray:
    vals, vecs = linalg.eigh(matrix)
    if np.min(vals) <= 0.0:
        raise DataError(f"{what} is not positive definite (min eigenvalue {np.min(vals):.3e})")
    return (vecs * vals**power) @ vecs.T


def _inv_sqrt(matrix: np.ndarray) -> np.ndarray:
    return _psd_power(matrix, -0.5, "covariance")


def _matrix(values: object, shape: tuple[int, int], name: str) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(values, dtype=float))
    if arr.shape != shape:
        raise DataError(f"{name} must have shape {shape} (got {arr.shape})")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True, eq=False)
class GaussianSem:
    E: np.ndarray
    D: np.ndarray
    F: np.ndarray
    G: np.ndarray
    A: np.ndarray
    sigma_u: np.ndarray
    noise_var: float = 0.25
    y_noise_var: float = 0.1
    _cov: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        d_u = np.atleast_2d(self.D).shape[0]
        d_x = np.atleast_2d(self.E).shape[0]
        d_c = np.atleast_2d(self.F).shape[0]
        shapes = {
            "E": (d_x, d_u),
            "D": (d_u, d_u),
            "F": (d_c, d_x),
            "G": (d_c, d_u),
            "A": (d_u, d_c),
            "sigma_u": (d_u, d_u),
        }
        for name, shape in shapes.items():
            object.__setattr__(self, name, _matrix(getattr(self, name), shape, name))
        if np.linalg.cond(self.D) > MAX_D_CONDITION:
            raise DataError("D is singular; the bridge matrix H = D^{-T} A is undefined")
        _psd_power(self.sigma_u, 1.0, "sigma_u")
        object.__setattr__(self, "_cov", self._joint_covariance())

    @classmethod
    def from_spec(cls, spec: GaussianLinearSemSpec) -> "GaussianSem":
        """Matrices from ``spec``; unset ones drawn from the spec seed."""
        rng = stream(spec.seed, spec.kind, "matrices")
        drawn = random_gaussian_sem(rng, spec.d_u, spec.d_x, spec.d_c, spec.noise_var, spec.y_noise_var)
        shapes = {
            "E": (spec.d_x, spec.d_u),
            "D": (spec.d_u, spec.d_u),
            "F": (spec.d_c, spec.d_x),
            "G": (spec.d_c, spec.d_u),
            "A": (spec.d_u, spec.d_c),
            "sigma_u": (spec.d_u, spec.d_u),
        }
        given = {
            name: _matrix(getattr(spec, name), shape, name)
            for name, shape in shapes.items()
            if getattr(spec, name) is not None
        }
        return cls(
            **{name: given.get(name, getattr(drawn, name)) for name in shapes},
            noise_var=spec.noise_var,
            y_noise_var=spec.y_noise_var,
        )

    @property
    def dims(self) -> tuple[int, int, int]:
        """(d_u, d_x, d_c); d_w = d_u."""
        return self.D.shape[0], self.E.shape[0], self.F.shape[0]

    @property
    def H(self) -> np.ndarray:
        """Bridge matrix D^{-T} A."""
        return linalg.solve(self.D.T, self.A)

    def with_sigma_u(self, sigma_u: np.ndarray) -> "GaussianSem":
        return GaussianSem(
            E=self.E, D=self.D, F=self.F, G=self.G, A=self.A,
            sigma_u=np.asarray(sigma_u, dtype=float),
            noise_var=self.noise_var, y_noise_var=self.y_noise_var,
        )

    def _joint_covariance(self) -> np.ndarray:
        # (U, X, W, C) as a linear map of the independent (U, e_x, e_w, e_c).
        d_u, d_x, d_c = self.dims
        zeros = np.zeros
        i_u, i_x, i_c = np.eye(d_u), np.eye(d_x), np.eye(d_c)
        t = np.block([
            [i_u, zeros((d_u, d_x)), zeros((d_u, d_u)), zeros((d_u, d_c))],
            [self.E, i_x, zeros((d_x, d_u)), zeros((d_x, d_c))],
            [self.D, zeros((d_u, d_x)), i_u, zeros((d_u, d_c))],
            [self.F @ self.E + self.G, self.F, zeros((d_c, d_u)), i_c],
        ])
        noise = linalg.block_diag(
            self.sigma_u,
            self.noise_var * i_x,
            self.noise_var * i_u,
            self.noise_var * i_c,
        )
        return t @ noise @ t.T

    def _slices(self) -> dict[str, slice]:
        d_u, d_x, d_c = self.dims
        return {
            "U": slice(0, d_u),
            "X": slice(d_u, d_u + d_x),
            "W": slice(d_u + d_x, 2 * d_u + d_x),
            "C": slice(2 * d_u + d_x, 2 * d_u + d_x + d_c),
        }

    def conditional_moments(self, x: np.ndarray) -> ConditionalMoments:
        """Exact moments of (U, W, C) given X = x."""
        s = self._slices()
        cov = self._cov
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.dims[1]:
            raise DataError(f"x has {x.shape[0]} entries; SEM has d_x={self.dims[1]}")
        rest = np.r_[np.arange(s["U"].start, s["U"].stop), np.arange(s["W"].start, s["C"].stop)]
        cross = cov[np.ix_(rest, np.arange(s["X"].start, s["X"].stop))]
        sxx = cov[s["X"], s["X"]]
        gain = linalg.solve(sxx, cross.T, assume_a="pos").T
        mean = gain @ x
        cond = cov[np.ix_(rest, rest)] - gain @ cross.T
        d_u, _, d_c = self.dims
        u_, w_, c_ = slice(0, d_u), slice(d_u, 2 * d_u), slice(2 * d_u, 2 * d_u + d_c)
        return ConditionalMoments(
            x=x,
            mu_u=mean[u_],
            mu_w=mean[w_],
            mu_c=mean[c_],
            sigma_w=cond[w_, w_],
            sigma_c=cond[c_, c_],
            sigma_wc=cond[w_, c_],
            sigma_uc=cond[u_, c_],
        )

    def expected_y(self, x: np.ndarray) -> float:
        """E[Y | x] = mu_u^T A mu_c + tr(A^T Cov(U, C | x))."""
        m = self.conditional_moments(x)
        return float(m.mu_u @ self.A @ m.mu_c + np.trace(self.A.T @ m.sigma_uc))

    def sample(self, seed: int, key: tuple[str | int, ...], n: int) -> dict[str, np.ndarray]:
        d_u, d_x, d_c = self.dims
        sd = np.sqrt(self.noise_var)
        u = stream(seed, *key, "U").standard_normal((n, d_u)) @ linalg.cholesky(self.sigma_u, lower=False)
        x = u @ self.E.T + sd * stream(seed, *key, "X").standard_normal((n, d_x))
        w = u @ self.D.T + sd * stream(seed, *key, "W").standard_normal((n, d_u))
        c = x @ self.F.T + u @ self.G.T + sd * stream(seed, *key, "C").standard_normal((n, d_c))
        y = np.sum((u @ self.A) * c, axis=1) + np.sqrt(self.y_noise_var) * stream(seed, *key, "Y").standard_normal(n)
        return {"U": u, "X": x, "W": w, "C": c, "Y": y}


def random_gaussian_sem(
    rng: np.random.Generator,
    d_u: int = 2,
    d_x: int = 2,
    d_c: int = 2,
    noise_var: float = 0.25,
    y_noise_var: float = 0.1,
) -> GaussianSem:
    """A random valid SEM: well-conditioned D and a positive-definite Sigma_U."""
    while True:
        d = np.eye(d_u) + 0.3 * rng.standard_normal((d_u, d_u))
        if np.linalg.cond(d) < 1e3:
            break
    b = rng.standard_normal((d_u, d_u))
    return GaussianSem(
        E=rng.standard_normal((d_x, d_u)),
        D=d,
        F=0.5 * rng.standard_normal((d_c, d_x)),
        G=rng.standard_normal((d_c, d_u)),
        A=rng.standard_normal((d_u, d_c)),
        sigma_u=b @ b.T / d_u + 0.5 * np.eye(d_u),
        noise_var=noise_var,
        y_noise_var=y_noise_var,
    )


@dataclass(frozen=True, eq=False)
class SemData:
    """Generated batches plus the source and target SEMs they came from."""

    data: GeneratedData
    source: GaussianSem
    target: GaussianSem


def gen_gaussian_linear_sem(spec: GaussianLinearSemSpec) -> SemData:
    """Source z0 with Sigma_U, target z1 with Sigma_U scaled by ``target_sigma_u_scale``."""
    source = GaussianSem.from_spec(spec)
    target = source.with_sigma_u(spec.target_sigma_u_scale * source.sigma_u)
    sizes = spec.sizes()

    def domain(label: str, z: int, sem: GaussianSem) -> dict[Split, SampleBatch]:
        out: dict[Split, SampleBatch] = {}
        for split in SPLITS:
            rows = sem.sample(spec.seed, (spec.kind, label, split), sizes[split])
            rows["Z"] = np.full(sizes[split], float(z))
            out[split] = SampleBatch(rows, name=f"{label}:{split}")
        return out

    data = GeneratedData(
        scenario=spec.kind,
        sources={0: domain("z0", 0, source)},
        target=domain("target", 1, target),
        target_domain=1,
    )
    logger.info("Generated {} dims(u, x, c)={} sizes={}", spec.kind, source.dims, sizes)
    return SemData(data=data, source=source, target=target)
