"""Exact discrete-to-discrete optimal transport via the assignment problem.

The solver is a shortest-augmenting-path assignment algorithm in the
Jonker-Volgenant style (column reduction, reduction transfer, then Dijkstra
augmentation with column prices).  It returns both the optimal permutation and
the dual prices, from which the transport potentials at the reference points
are obtained.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InfeasibleDuals, NonSquare
from .model import PointCloud

_CHUNK = 256


def half_sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix of 0.5 * ||a_i - b_j||^2, computed from explicit differences.

    Chunked over rows to bound memory; exact in the sense that an entry is
    zero iff the two points coincide.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"point sets are {a.shape[1]}-d and {b.shape[1]}-d")
    out = np.empty((a.shape[0], b.shape[0]))
    for start in range(0, a.shape[0], _CHUNK):
        stop = min(start + _CHUNK, a.shape[0])
        diff = a[start:stop, None, :] - b[None, :, :]
        out[start:stop] = 0.5 * np.einsum("ijk,ijk->ij", diff, diff)
    return out


def half_sq_dists_gemm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """BLAS-backed variant of :func:`half_sq_dists` via the inner-product
    expansion; fast but subject to cancellation at the 1e-13 level, so it is
    reserved for softmax evaluations where that is harmless."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"point sets are {a.shape[1]}-d and {b.shape[1]}-d")
    out = a @ b.T
    out *= -1.0
    out += 0.5 * np.einsum("ij,ij->i", a, a)[:, None]
    out += 0.5 * np.einsum("ij,ij->i", b, b)[None, :]
    np.maximum(out, 0.0, out=out)
    return out


@dataclass(frozen=True)
class CostMatrix:
    """Pairwise transport costs 0.5 * ||u_i - x_j||^2."""

    entries: np.ndarray


def cost_matrix(reference: PointCloud, target: PointCloud) -> CostMatrix:
    return CostMatrix(half_sq_dists(reference.points, target.points))


def _lapjv(cost: np.ndarray):
    """Solve the square linear assignment problem.

    Returns (col_of, row_prices, col_prices): col_of[i] is the column assigned
    to row i; the prices are dual-feasible with equality on assigned pairs.
    """
    n = cost.shape[0]
    v = np.zeros(n)
    col_of = np.full(n, -1, dtype=np.int64)
    row_of = np.full(n, -1, dtype=np.int64)

    # column reduction (reverse order); a row keeps at most one column
    matches = np.zeros(n, dtype=np.int64)
    col_argmin = np.argmin(cost, axis=0)
    for j in range(n - 1, -1, -1):
        i1 = int(col_argmin[j])
        v[j] = cost[i1, j]
        if matches[i1] == 0:
            row_of[j] = i1
            col_of[i1] = j
        matches[i1] += 1

    # reduction transfer for uniquely assigned rows (needs a second column)
    if n > 1:
        for i in range(n):
            j1 = col_of[i]
            if j1 >= 0 and matches[i] == 1:
                red = cost[i] - v
                red[j1] = np.inf
                v[j1] -= red.min()

    # shortest augmenting path for each remaining free row
    for f in np.flatnonzero(col_of < 0):
        d = cost[f] - v
        pred = np.full(n, f, dtype=np.int64)
        done = np.zeros(n, dtype=bool)
        sink = -1
        mind = 0.0
        for _ in range(n):
            dm = np.where(done, np.inf, d)
            j = int(np.argmin(dm))
            mind = dm[j]
            done[j] = True
            i = row_of[j]
            if i < 0:
                sink = j
                break
            cand = mind + (cost[i] - v) - (cost[i, j] - v[j])
            upd = ~done & (cand < d)
            d[upd] = cand[upd]
            pred[upd] = i
        if sink < 0:
            raise RuntimeError("augmentation failed to reach a free column")
        v[done] += d[done] - mind
        j = sink
        while True:
            i = int(pred[j])
            row_of[j] = i
            j, col_of[i] = col_of[i], j
            if i == f:
                break

    u = cost[np.arange(n), col_of] - v[col_of]
    return col_of, u, v


@dataclass(frozen=True)
class Assignment:
    """Optimal bijection between equally sized point sets, plus LP duals."""

    perm: np.ndarray
    total_cost: float
    row_prices: np.ndarray
    col_prices: np.ndarray

    @property
    def full_sq_cost(self) -> float:
        """Total cost under the plain ||.||^2 convention (twice the half one)."""
        return 2.0 * self.total_cost


def solve_assignment(cost) -> Assignment:
    """Minimize sum_i c[i, sigma(i)] over permutations sigma."""
    entries = cost.entries if isinstance(cost, CostMatrix) else np.asarray(cost, dtype=np.float64)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise NonSquare(f"cost matrix is {entries.shape[0]}x{entries.shape[1]}")
    if not np.all(np.isfinite(entries)):
        raise ValueError("cost entries must be finite")
    col_of, u, v = _lapjv(np.ascontiguousarray(entries))
    total = float(entries[np.arange(entries.shape[0]), col_of].sum())
    return Assignment(perm=col_of, total_cost=total, row_prices=u, col_prices=v)


@dataclass(frozen=True)
class ExactTransportMap:
    """The optimal pairing u_i -> x_{sigma(i)}, defined on the reference points."""

    reference: PointCloud
    targets: np.ndarray  # row i is the image of reference point i
    perm: np.ndarray

    def at_indices(self, idx) -> np.ndarray:
        return self.targets[np.asarray(idx, dtype=np.int64)]


def map_from_assignment(
    reference: PointCloud, target: PointCloud, assignment: Assignment
) -> ExactTransportMap:
    return ExactTransportMap(
        reference=reference, targets=target.points[assignment.perm], perm=assignment.perm
    )


def ot_quantile_map(reference: PointCloud, target: PointCloud) -> ExactTransportMap:
    """Empirical quantile map: the cost-minimizing bijection from the
    reference sample onto the data sample (requires equal sizes)."""
    if reference.n != target.n:
        raise NonSquare(f"sizes differ: {reference.n} vs {target.n}")
    assignment = solve_assignment(cost_matrix(reference, target))
    return map_from_assignment(reference, target, assignment)


@dataclass(frozen=True)
class ExactPotentials:
    """Transport potential values at the reference points.

    ``phi_at_ref`` is 0.5*||u_i||^2 - alpha_i shifted so its minimum is zero;
    ``alpha``/``beta`` are the raw assignment duals.
    """

    phi_at_ref: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray


def ot_dual_potentials(
    reference: PointCloud, target: PointCloud, assignment: Assignment, feas_tol: float = 1e-6
) -> ExactPotentials:
    """Potentials from the assignment duals, with feasibility validated.

    Checks alpha_i + beta_j <= c_ij for every pair and equality on assigned
    pairs; a violation beyond ``feas_tol`` raises :class:`InfeasibleDuals`.
    """
    entries = half_sq_dists(reference.points, target.points)
    alpha = assignment.row_prices
    beta = assignment.col_prices
    scale = max(1.0, float(np.abs(entries).max()))
    slack = entries - alpha[:, None] - beta[None, :]
    if slack.min() < -feas_tol * scale:
        raise InfeasibleDuals(f"dual feasibility violated by {-slack.min():.3e}")
    tight = slack[np.arange(reference.n), assignment.perm]
    if np.abs(tight).max() > feas_tol * scale:
        raise InfeasibleDuals("complementary slackness violated on assigned pairs")
    phi = 0.5 * np.einsum("ij,ij->i", reference.points, reference.points) - alpha
    phi = phi - phi.min()
    return ExactPotentials(phi_at_ref=phi, alpha=alpha, beta=beta)
