"""Brute-force and grid-search oracles, shared by the test suite and the CLI.

These deliberately avoid the production code paths they validate: the
assignment oracle enumerates all permutations, and the quantile oracle scans a
dense grid of candidate points.
"""

from __future__ import annotations

from itertools import permutations

import numpy as np

from .exact import half_sq_dists, solve_assignment
from .geometric import geometric_quantile
from .model import PointCloud
from .sampling import SeededRng


def brute_force_assignment(cost: np.ndarray) -> tuple[tuple[int, ...], float]:
    """Exhaustive minimum over all n! permutations."""
    cost = np.asarray(cost, dtype=np.float64)
    n = cost.shape[0]
    best_perm = None
    best = np.inf
    rows = np.arange(n)
    for perm in permutations(range(n)):
        total = cost[rows, perm].sum()
        if total < best:
            best = total
            best_perm = perm
    return best_perm, float(best)


def assignment_suite(trials: int = 50, max_n: int = 7, max_d: int = 3, seed: int = 0):
    """Compare the solver against the exhaustive oracle on random instances.

    Returns (n_passed, n_failed, worst_gap).
    """
    gen = SeededRng(seed, 900).generator()
    passed = failed = 0
    worst = 0.0
    for _ in range(trials):
        n = int(gen.integers(1, max_n + 1))
        d = int(gen.integers(1, max_d + 1))
        u = gen.standard_normal((n, d))
        x = gen.standard_normal((n, d))
        cost = half_sq_dists(u, x)
        result = solve_assignment(cost)
        _, best = brute_force_assignment(cost)
        gap = abs(result.total_cost - best)
        worst = max(worst, gap)
        if gap <= 1e-12 * max(1.0, abs(best)):
            passed += 1
        else:
            failed += 1
    return passed, failed, worst


def grid_quantile_oracle(cloud: PointCloud, u: np.ndarray, span: float = 4.0, steps: int = 81):
    """Dense grid minimizer of the quantile objective (d <= 2 only)."""
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    center = cloud.points.mean(axis=0)
    axes = [np.linspace(c - span, c + span, steps) for c in center]
    if cloud.d == 1:
        grid = axes[0][:, None]
    elif cloud.d == 2:
        gx, gy = np.meshgrid(axes[0], axes[1], indexing="ij")
        grid = np.column_stack([gx.ravel(), gy.ravel()])
    else:
        raise ValueError("grid oracle supports d <= 2")
    dists = np.sqrt(2.0 * half_sq_dists(grid, cloud.points))
    objective = dists.mean(axis=1) + (cloud.points.mean(axis=0) - grid) @ u
    return grid[int(np.argmin(objective))]


def geometric_suite(trials: int = 10, seed: int = 0):
    """Check the quantile solver against the grid oracle on 2D clouds.

    Returns (n_passed, n_failed, worst_distance); a trial passes when the
    solver's point beats or matches the oracle objective up to one grid cell.
    """
    gen = SeededRng(seed, 901).generator()
    passed = failed = 0
    worst = 0.0
    for _ in range(trials):
        n = int(gen.integers(10, 40))
        cloud = PointCloud(gen.standard_normal((n, 2)))
        u = gen.uniform(-0.6, 0.6, size=2)
        result = geometric_quantile(cloud, u)
        oracle = grid_quantile_oracle(cloud, u, span=5.0, steps=101)
        cell = 2.0 * 5.0 / 100.0
        dist = float(np.linalg.norm(result.point - oracle))
        worst = max(worst, dist)
        if dist <= 2.0 * cell:
            passed += 1
        else:
            failed += 1
    return passed, failed, worst
