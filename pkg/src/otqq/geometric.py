"""Geometric ranks and quantiles, and the rank-matched Q-Q baseline.

The geometric rank of y within a cloud is the average of the unit vectors
pointing from the data to y (coincident points contribute the zero vector).
The geometric quantile at a rank u with ||u|| < 1 minimizes

    mean_i [ ||X_i - q|| + <u, X_i - q> ]

and is found by a damped Weiszfeld fixed point with the standard subgradient
correction when an iterate lands on a data point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .model import PointCloud

_COINCIDENT = 1e-12


def geometric_rank(cloud: PointCloud, y) -> np.ndarray:
    """Average unit vector from the data points to y; norm is always <= 1."""
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if y.shape[0] != cloud.d:
        raise DimensionMismatch(f"point is {y.shape[0]}-d, cloud is {cloud.d}-d")
    diff = y[None, :] - cloud.points
    norms = np.linalg.norm(diff, axis=1)
    keep = norms > _COINCIDENT
    if not np.any(keep):
        return np.zeros(cloud.d)
    unit = diff[keep] / norms[keep, None]
    return unit.sum(axis=0) / cloud.n


def _rank_residual(points: np.ndarray, q: np.ndarray, u: np.ndarray):
    """Rank of q minus u, computed on the non-coincident points, plus the
    fraction of coincident mass (the subgradient budget)."""
    diff = q[None, :] - points
    norms = np.linalg.norm(diff, axis=1)
    keep = norms > _COINCIDENT
    n = points.shape[0]
    if np.any(keep):
        rank = (diff[keep] / norms[keep, None]).sum(axis=0) / n
    else:
        rank = np.zeros_like(q)
    coincident_mass = float(np.count_nonzero(~keep)) / n
    return rank - u, coincident_mass, norms, keep


@dataclass(frozen=True)
class QuantileResult:
    point: np.ndarray
    converged: bool
    iterations: int
    residual: float


def geometric_quantile(
    cloud: PointCloud,
    u,
    tol: float = 1e-8,
    max_iter: int = 10_000,
) -> QuantileResult:
    """Point whose geometric rank within the cloud equals ``u`` (||u|| < 1)."""
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    if u.shape[0] != cloud.d:
        raise DimensionMismatch("rank and cloud dimensions differ")
    if np.linalg.norm(u) >= 1.0:
        raise ValueError("rank must have norm < 1")
    # internal centering keeps the iteration translation-equivariant
    center = cloud.points.mean(axis=0)
    pts = cloud.points - center
    n = pts.shape[0]
    q = np.zeros(cloud.d)
    converged = False
    it = 0
    resid_norm = np.inf
    for it in range(1, max_iter + 1):
        resid, coincident_mass, norms, keep = _rank_residual(pts, q, u)
        resid_norm = float(np.linalg.norm(resid))
        if resid_norm <= tol + coincident_mass:
            # at a data point the self-term may absorb up to 1/n of the pull
            converged = True
            break
        inv = np.zeros(n)
        inv[keep] = 1.0 / norms[keep]
        denom = inv.sum()
        if denom == 0.0:
            break
        target = (inv @ pts + n * u) / denom
        if coincident_mass > 0.0:
            # damped step away from the data point, per the subgradient rule
            shrink = max(0.0, 1.0 - coincident_mass / resid_norm)
            q = q + shrink * (target - q)
        else:
            q = target
    return QuantileResult(point=q + center, converged=converged, iterations=it, residual=resid_norm)


def geometric_qq(x: PointCloud, y: PointCloud, tol: float = 1e-8, max_iter: int = 10_000):
    """Rank-matched pairs: for each y_j, the x-quantile at y_j's rank in y.

    The rank of y_j excludes the self term (leave-one-out through the
    coincident-point convention), keeping its norm strictly below 1.  Returns
    the matched x-points as an (n, d) array aligned with y, plus a list of any
    non-converged indices.
    """
    if x.d != y.d:
        raise DimensionMismatch("samples must share a dimension")
    matched = np.empty_like(y.points)
    flagged: list[int] = []
    for j in range(y.n):
        rank = geometric_rank(y, y.points[j])
        result = geometric_quantile(x, rank, tol=tol, max_iter=max_iter)
        matched[j] = result.point
        if not result.converged:
            flagged.append(j)
    return matched, flagged
