"""Seeded, reproducible generation of reference and scenario samples.

Every generator takes an explicit :class:`SeededRng`; the same (seed, stream)
pair reproduces a sample bit-for-bit on any platform because the PCG64 bit
generator is a fixed, documented algorithm.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import BadSpec, DimensionMismatch
from .model import PointCloud

_U64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class SeededRng:
    """A (seed, stream) pair naming one independent random stream."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed & _U64, spawn_key=(self.stream & _U64,))
        return np.random.Generator(np.random.PCG64(ss))

    def substream(self, offset: int) -> "SeededRng":
        return SeededRng(self.seed, (self.stream & _U64) * 1_000_003 + offset + 1)


@dataclass(frozen=True)
class GaussianSpec:
    """Multivariate normal with the given mean vector and covariance matrix."""

    mean: tuple | np.ndarray
    cov: tuple | np.ndarray


@dataclass(frozen=True)
class StudentTSpec:
    """Multivariate Student t: location, shape matrix, degrees of freedom."""

    mean: tuple | np.ndarray
    shape: tuple | np.ndarray
    dof: float


@dataclass(frozen=True)
class ParetoSpec:
    """Independent Pareto marginals on [1, inf), one shape per coordinate."""

    alphas: tuple | np.ndarray


@dataclass(frozen=True)
class ProductSpec:
    """Independent coordinates, each drawn from a one-dimensional spec."""

    marginals: tuple


@dataclass(frozen=True)
class AbsShiftGaussianSpec:
    """Standard normal pushed through x -> 1 + |x| componentwise."""

    dim: int = 3


GeneratorSpec = Union[GaussianSpec, StudentTSpec, ParetoSpec, ProductSpec, AbsShiftGaussianSpec]


def spec_dimension(spec: GeneratorSpec) -> int:
    if isinstance(spec, GaussianSpec):
        return np.atleast_1d(np.asarray(spec.mean)).shape[0]
    if isinstance(spec, StudentTSpec):
        return np.atleast_1d(np.asarray(spec.mean)).shape[0]
    if isinstance(spec, ParetoSpec):
        return np.atleast_1d(np.asarray(spec.alphas)).shape[0]
    if isinstance(spec, ProductSpec):
        return len(spec.marginals)
    if isinstance(spec, AbsShiftGaussianSpec):
        return spec.dim
    raise BadSpec(f"unknown generator spec {type(spec).__name__}")


def _psd_factor(cov: np.ndarray) -> np.ndarray:
    """Symmetric factor L with L L^T = cov; Cholesky, falling back to an
    eigenvalue floor for semidefinite matrices."""
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise BadSpec("covariance must be a square matrix")
    if not np.allclose(cov, cov.T, atol=1e-10):
        raise BadSpec("covariance must be symmetric")
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(cov)
        floor = -1e-10 * max(1.0, float(np.abs(w).max()))
        if np.any(w < floor):
            raise BadSpec("covariance has a negative eigenvalue")
        return v * np.sqrt(np.clip(w, 0.0, None))


def sample_unit_ball(n: int, d: int, rng: SeededRng) -> PointCloud:
    """n i.i.d. points uniform on the closed unit ball of R^d.

    Gaussian direction times radius V^(1/d) with V uniform; robust in any
    dimension, and every returned norm is <= 1.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    gen = rng.generator()
    g = gen.standard_normal((n, d))
    norms = np.linalg.norm(g, axis=1)
    norms[norms == 0.0] = 1.0
    radius = gen.random(n) ** (1.0 / d)
    pts = g * (radius / norms)[:, None]
    # guard against the last-ulp rounding pushing a norm above 1
    r2 = np.einsum("ij,ij->i", pts, pts)
    over = r2 > 1.0
    if np.any(over):
        pts[over] /= np.sqrt(r2[over])[:, None] * (1.0 + 4e-16)
    return PointCloud(pts)


def _generate_column(spec: GeneratorSpec, n: int, gen: np.random.Generator) -> np.ndarray:
    if spec_dimension(spec) != 1:
        raise BadSpec("product marginals must be one-dimensional")
    return _draw(spec, n, gen)


def _draw(spec: GeneratorSpec, n: int, gen: np.random.Generator) -> np.ndarray:
    if isinstance(spec, GaussianSpec):
        mean = np.atleast_1d(np.asarray(spec.mean, dtype=np.float64))
        factor = _psd_factor(spec.cov)
        if factor.shape[0] != mean.shape[0]:
            raise BadSpec("mean and covariance dimensions differ")
        z = gen.standard_normal((n, mean.shape[0]))
        return mean + z @ factor.T
    if isinstance(spec, StudentTSpec):
        if not (spec.dof > 0):
            raise BadSpec("degrees of freedom must be positive")
        mean = np.atleast_1d(np.asarray(spec.mean, dtype=np.float64))
        factor = _psd_factor(spec.shape)
        z = gen.standard_normal((n, mean.shape[0])) @ factor.T
        chi2 = gen.chisquare(spec.dof, size=n)
        return mean + z * np.sqrt(spec.dof / chi2)[:, None]
    if isinstance(spec, ParetoSpec):
        alphas = np.atleast_1d(np.asarray(spec.alphas, dtype=np.float64))
        if np.any(alphas <= 0):
            raise BadSpec("Pareto shapes must be positive")
        v = gen.random((n, alphas.shape[0]))
        return (1.0 - v) ** (-1.0 / alphas)
    if isinstance(spec, ProductSpec):
        cols = [_generate_column(m, n, gen) for m in spec.marginals]
        return np.hstack(cols)
    if isinstance(spec, AbsShiftGaussianSpec):
        z = gen.standard_normal((n, spec.dim))
        return 1.0 + np.abs(z)
    raise BadSpec(f"unknown generator spec {type(spec).__name__}")


def generate(spec: GeneratorSpec, n: int, rng: SeededRng) -> PointCloud:
    """n i.i.d. draws from the law described by ``spec``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return PointCloud(_draw(spec, n, rng.generator()))


def inject_outliers(cloud: PointCloud, outliers) -> PointCloud:
    """Replace the first len(outliers) rows by the given points (by index, so
    the operation is reproducible)."""
    out = np.asarray(outliers, dtype=np.float64)
    if out.size == 0:
        return cloud
    out = np.atleast_2d(out)
    if out.shape[1] != cloud.d:
        raise DimensionMismatch(f"outliers are {out.shape[1]}-d, cloud is {cloud.d}-d")
    if out.shape[0] > cloud.n:
        raise ValueError("more outliers than points")
    pts = cloud.points.copy()
    pts[: out.shape[0]] = out
    return PointCloud(pts, names=cloud.names, weights=cloud.weights)
