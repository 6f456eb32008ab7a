"""Shared data model: point clouds, compact regions, standardization, run configuration.

All types are immutable after construction (arrays are marked read-only), so
instances can be shared freely across threads; the operations below are pure.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ConstantColumn, DimensionMismatch, EmptyRestriction

_WEIGHT_TOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True, order="C")
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PointCloud:
    """An ordered sample of n points in R^d, i.e. a weighted empirical measure.

    Weights default to the uniform 1/n and must sum to one; coordinates must
    be finite.
    """

    points: np.ndarray
    names: tuple[str, ...] | None = None
    weights: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError("points must be a nonempty n x d array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        object.__setattr__(self, "points", _readonly(pts))
        n = pts.shape[0]
        if self.weights is None:
            w = np.full(n, 1.0 / n)
        else:
            w = np.asarray(self.weights, dtype=np.float64)
            if w.shape != (n,):
                raise ValueError("weights must have one entry per point")
            if np.any(w < 0):
                raise ValueError("weights must be non-negative")
            if abs(w.sum() - 1.0) > _WEIGHT_TOL:
                raise ValueError("weights must sum to 1")
        object.__setattr__(self, "weights", _readonly(w))
        if self.names is not None:
            names = tuple(str(c) for c in self.names)
            if len(names) != pts.shape[1]:
                raise ValueError("names must have one entry per column")
            object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def with_points(self, points: np.ndarray) -> "PointCloud":
        """New cloud with the same column names, uniform weights."""
        return PointCloud(points, names=self.names)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box [lower_1, upper_1] x ... x [lower_d, upper_d] (closed)."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=np.float64))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower and upper must be d-vectors of equal length")
        if np.any(lo > hi):
            raise ValueError("lower must be <= upper componentwise")
        object.__setattr__(self, "lower", _readonly(lo))
        object.__setattr__(self, "upper", _readonly(hi))

    @property
    def d(self) -> int:
        return self.lower.shape[0]

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if pts.shape[1] != self.d:
            raise DimensionMismatch(f"points are {pts.shape[1]}-d, box is {self.d}-d")
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)

    def describe(self) -> str:
        sides = ", ".join(f"[{lo:g}, {hi:g}]" for lo, hi in zip(self.lower, self.upper))
        return f"box {sides}"


@dataclass(frozen=True)
class Ball:
    """Closed Euclidean ball of given radius centered at the origin."""

    radius: float

    def __post_init__(self):
        if not (self.radius > 0):
            raise ValueError("radius must be positive")

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return np.einsum("ij,ij->i", pts, pts) <= self.radius * self.radius

    def describe(self) -> str:
        return f"ball radius {self.radius:g}"


CompactRegion = Union[Box, Ball]


@dataclass(frozen=True)
class StandardizeTransform:
    """Columnwise affine map x -> (x - mean) / scale and its inverse."""

    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        s = np.atleast_1d(np.asarray(self.scale, dtype=np.float64))
        if m.shape != s.shape:
            raise ValueError("mean and scale must have equal length")
        if np.any(s <= 0):
            raise ValueError("scale entries must be positive")
        object.__setattr__(self, "mean", _readonly(m))
        object.__setattr__(self, "scale", _readonly(s))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.mean) / self.scale

    def invert(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) * self.scale + self.mean


@dataclass(frozen=True)
class RunConfig:
    """Deterministic knobs of a run; every random draw derives from ``seed``."""

    seed: int = 0
    epsilon: float = 1e-2
    sinkhorn_tol: float = 1e-7
    sinkhorn_max_iter: int = 50_000
    mc_points: int = 4096
    resamples: int = 200
    eta: float = 0.1

    def __post_init__(self):
        if not (self.epsilon > 0):
            raise ValueError("epsilon must be positive")
        if not (self.sinkhorn_tol > 0):
            raise ValueError("sinkhorn_tol must be positive")
        for name in ("sinkhorn_max_iter", "mc_points", "resamples"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not (self.eta > 0):
            raise ValueError("eta must be positive")

    def fingerprint(self) -> str:
        payload = json.dumps(
            {
                "seed": int(self.seed),
                "epsilon": float(self.epsilon),
                "sinkhorn_tol": float(self.sinkhorn_tol),
                "sinkhorn_max_iter": int(self.sinkhorn_max_iter),
                "mc_points": int(self.mc_points),
                "resamples": int(self.resamples),
                "eta": float(self.eta),
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def standardize(cloud: PointCloud, ddof: int = 1) -> tuple[PointCloud, StandardizeTransform]:
    """Center and rescale each column to mean 0, standard deviation 1.

    ``ddof=1`` (sample standard deviation) is the default convention; pass
    ``ddof=0`` for the population one.  Raises :class:`ConstantColumn` for any
    column with zero spread.
    """
    pts = cloud.points
    mean = pts.mean(axis=0)
    if pts.shape[0] > ddof:
        scale = pts.std(axis=0, ddof=ddof)
    else:
        scale = np.zeros(pts.shape[1])
    for j in range(pts.shape[1]):
        if scale[j] == 0.0:
            raise ConstantColumn(j)
    transform = StandardizeTransform(mean, scale)
    out = PointCloud(transform.apply(pts), names=cloud.names, weights=cloud.weights)
    return out, transform


def bounding_region(clouds: list[PointCloud], inflation: float = 0.0) -> Box:
    """Smallest axis-aligned box containing every cloud, each side widened by
    ``inflation`` times its length (half on each end)."""
    if not clouds:
        raise ValueError("at least one cloud is required")
    if inflation < 0:
        raise ValueError("inflation must be non-negative")
    d = clouds[0].d
    for c in clouds:
        if c.d != d:
            raise DimensionMismatch("clouds must share a dimension")
    stacked = np.vstack([c.points for c in clouds])
    lower = stacked.min(axis=0)
    upper = stacked.max(axis=0)
    pad = inflation * (upper - lower) / 2.0
    return Box(lower - pad, upper + pad)


def restrict(cloud: PointCloud, region: CompactRegion) -> tuple[PointCloud, np.ndarray]:
    """Sub-cloud of the points inside ``region`` (boundary inclusive).

    Returns the restricted cloud (weights renormalized) and the original
    indices of the retained points.
    """
    mask = region.contains(cloud.points)
    kept = np.flatnonzero(mask)
    if kept.size == 0:
        raise EmptyRestriction("no point lies inside the region")
    w = cloud.weights[kept]
    return (
        PointCloud(cloud.points[kept], names=cloud.names, weights=w / w.sum()),
        kept,
    )
