"""Plot-set construction, diagonal-band diagnostics, slope fits, and the
entropic two-sample test with its resampled null distribution."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .entropic import (
    EotMap,
    EotPotential,
    SinkhornState,
    eval_map_and_dual,
    sinkhorn,
)
from .errors import DegenerateFit, DimensionMismatch, EmptyRestriction, InsufficientData
from .exact import ExactTransportMap, half_sq_dists
from .model import CompactRegion, PointCloud, RunConfig
from .sampling import SeededRng, sample_unit_ball

# stream ids for the independent random draws of one experiment
STREAM_X = 1
STREAM_Y = 2
STREAM_REFERENCE = 3
STREAM_MC = 4
STREAM_SUBSAMPLE = 5
STREAM_NULL = 6


@dataclass(frozen=True)
class PlotSet:
    """The 2D pairs behind one scatter panel (one Q-Q component, or the
    potential plot), with enough metadata to label it."""

    pairs: np.ndarray
    component: int | str
    method: str
    region_tag: str
    sample_sizes: tuple[int, int, int]

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.float64)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError("pairs must be a k x 2 array")
        if not np.all(np.isfinite(pairs)):
            raise ValueError("pairs must be finite")
        pairs = pairs.copy()
        pairs.flags.writeable = False
        object.__setattr__(self, "pairs", pairs)

    @property
    def label(self) -> str:
        comp = self.component if isinstance(self.component, str) else f"component {self.component + 1}"
        return f"{self.method} {comp}"


@dataclass(frozen=True)
class BandDiagnostic:
    """Fraction of pairs within perpendicular distance eta of the diagonal."""

    eta: float
    fraction_inside: float
    max_perpendicular_deviation: float


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    rmse: float


@dataclass(frozen=True)
class TestReport:
    e_n: float
    f_n: float
    null_e: np.ndarray
    null_f: np.ndarray
    p_e: float
    p_f: float
    n_effective: int
    fingerprint: str


def _region_indices(reference: PointCloud, region: CompactRegion | None) -> np.ndarray:
    if region is None:
        return np.arange(reference.n)
    idx = np.flatnonzero(region.contains(reference.points))
    if idx.size == 0:
        raise EmptyRestriction("no reference point lies inside the region")
    return idx


def _map_values(transport, reference: PointCloud, idx: np.ndarray) -> np.ndarray:
    if isinstance(transport, ExactTransportMap):
        if transport.reference.n != reference.n:
            raise DimensionMismatch("map was built on a different reference sample")
        return transport.at_indices(idx)
    if isinstance(transport, EotMap):
        return transport.at(reference.points[idx])
    values = np.asarray(transport, dtype=np.float64)
    if values.shape[0] != reference.n:
        raise DimensionMismatch("map values are not aligned with the reference sample")
    return values[idx]


def _potential_values(potential, reference: PointCloud, idx: np.ndarray) -> np.ndarray:
    if isinstance(potential, EotPotential):
        return potential.at(reference.points[idx])
    values = np.asarray(potential, dtype=np.float64)
    if values.shape[0] != reference.n:
        raise DimensionMismatch("potential values are not aligned with the reference sample")
    return values[idx]


def _region_tag(region: CompactRegion | None) -> str:
    return "full reference sample" if region is None else region.describe()


def build_qq_sets(
    map_x,
    map_y,
    reference: PointCloud,
    region: CompactRegion | None = None,
    method: str = "OT",
    sample_sizes: tuple[int, int, int] | None = None,
    region_tag: str | None = None,
) -> list[PlotSet]:
    """One pair set per coordinate: i-th components of the two maps at the
    reference points retained by ``region``."""
    idx = _region_indices(reference, region)
    tx = _map_values(map_x, reference, idx)
    ty = _map_values(map_y, reference, idx)
    if tx.shape != ty.shape:
        raise DimensionMismatch("the two maps produce different shapes")
    sizes = sample_sizes or (tx.shape[0], ty.shape[0], reference.n)
    tag = region_tag if region_tag is not None else _region_tag(region)
    return [
        PlotSet(
            pairs=np.column_stack([tx[:, i], ty[:, i]]),
            component=i,
            method=method,
            region_tag=tag,
            sample_sizes=sizes,
        )
        for i in range(tx.shape[1])
    ]


def build_potential_set(
    potential_x,
    potential_y,
    reference: PointCloud,
    region: CompactRegion | None = None,
    method: str = "OT",
    sample_sizes: tuple[int, int, int] | None = None,
    region_tag: str | None = None,
) -> PlotSet:
    """Scalar potential pairs at the retained reference points."""
    idx = _region_indices(reference, region)
    px = _potential_values(potential_x, reference, idx)
    py = _potential_values(potential_y, reference, idx)
    sizes = sample_sizes or (px.shape[0], py.shape[0], reference.n)
    return PlotSet(
        pairs=np.column_stack([px, py]),
        component="potential",
        method=method,
        region_tag=region_tag if region_tag is not None else _region_tag(region),
        sample_sizes=sizes,
    )


def band_fraction(plot_set: PlotSet, eta: float) -> BandDiagnostic:
    """Membership uses the perpendicular distance |x - y| / sqrt(2) to the
    diagonal, strictly below eta."""
    if not (eta > 0):
        raise ValueError("eta must be positive")
    dev = np.abs(plot_set.pairs[:, 0] - plot_set.pairs[:, 1]) / math.sqrt(2.0)
    return BandDiagnostic(
        eta=float(eta),
        fraction_inside=float(np.mean(dev < eta)),
        max_perpendicular_deviation=float(dev.max()),
    )


def fit_slope(plot_set: PlotSet) -> SlopeFit:
    """Ordinary least squares of y on x."""
    x = plot_set.pairs[:, 0]
    y = plot_set.pairs[:, 1]
    if x.size < 2 or np.ptp(x) == 0.0:
        raise DegenerateFit("need at least two distinct x values")
    xc = x - x.mean()
    slope = float((xc @ (y - y.mean())) / (xc @ xc))
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    return SlopeFit(slope=slope, intercept=intercept, rmse=float(np.sqrt(np.mean(resid**2))))


def _map_eval(transport, points: np.ndarray) -> np.ndarray:
    if isinstance(transport, EotMap):
        return transport.at(points)
    values = np.asarray(transport, dtype=np.float64)
    if values.shape[0] != points.shape[0]:
        raise DimensionMismatch("map values are not aligned with the integration points")
    return values


def _potential_eval(potential, points: np.ndarray) -> np.ndarray:
    if isinstance(potential, EotPotential):
        return potential.at(points)
    values = np.asarray(potential, dtype=np.float64)
    if values.shape[0] != points.shape[0]:
        raise DimensionMismatch("potential values are not aligned with the integration points")
    return values


def statistic_e(map_x, map_y, mc: PointCloud, n: int) -> float:
    """n times the Monte Carlo average of the squared map difference."""
    if n < 1:
        raise ValueError("n must be >= 1")
    dx = _map_eval(map_x, mc.points)
    dy = _map_eval(map_y, mc.points)
    diff = dx - dy
    return float(n * np.mean(np.einsum("ij,ij->i", diff, diff)))


def statistic_f(potential_x, potential_y, mc: PointCloud, n: int) -> float:
    """n times the Monte Carlo average of the squared potential difference."""
    if n < 1:
        raise ValueError("n must be >= 1")
    px = _potential_eval(potential_x, mc.points)
    py = _potential_eval(potential_y, mc.points)
    return float(n * np.mean((px - py) ** 2))


def p_value(observed: float, null) -> float:
    """Add-one resampling p-value, strictly inside (0, 1]."""
    null = np.asarray(null, dtype=np.float64)
    if null.size == 0:
        raise ValueError("null sample must be nonempty")
    return float((1 + int(np.sum(null >= observed))) / (null.size + 1))


def reference_sample(cfg: RunConfig, n: int, d: int) -> PointCloud:
    return sample_unit_ball(n, d, SeededRng(cfg.seed, STREAM_REFERENCE))


def mc_sample(cfg: RunConfig, d: int) -> PointCloud:
    return sample_unit_ball(cfg.mc_points, d, SeededRng(cfg.seed, STREAM_MC))


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("OTQQ_THREADS", "1")))
    except ValueError:
        return 1


def _side_statistics(reference: PointCloud, mc: PointCloud, target: PointCloud, state: SinkhornState):
    """Map values and anchored potential values at the Monte Carlo points,
    sharing one softmax pass over reference + mc evaluations."""
    log_b = np.log(target.weights)
    stacked = np.vstack([reference.points, mc.points])
    mapped, dual = eval_map_and_dual(stacked, target.points, log_b, state.g, state.epsilon)
    half_sq = 0.5 * np.einsum("ij,ij->i", stacked, stacked)
    objective = half_sq - dual
    base = float(objective[: reference.n].min())
    potentials = objective[reference.n :] - base
    return mapped[reference.n :], potentials


def _pair_statistics(reference, mc, x, state_x, y, state_y, n_eff):
    map_x, pot_x = _side_statistics(reference, mc, x, state_x)
    map_y, pot_y = _side_statistics(reference, mc, y, state_y)
    diff = map_x - map_y
    e_val = float(n_eff * np.mean(np.einsum("ij,ij->i", diff, diff)))
    f_val = float(n_eff * np.mean((pot_x - pot_y) ** 2))
    return e_val, f_val


def eot_two_sample_test(
    x: PointCloud,
    y: PointCloud,
    cfg: RunConfig,
    reference: PointCloud | None = None,
    mc: PointCloud | None = None,
    observed_states: tuple[SinkhornState, SinkhornState] | None = None,
) -> TestReport:
    """Observed E/F statistics with a pooled split-half null distribution.

    Null replicates re-solve the entropic problems on two disjoint random
    halves of the pooled sample, against the same reference and Monte Carlo
    points as the observed statistic; replicate solves are warm-started from
    the observed duals (an initialization only; every solve converges to the
    configured tolerance).  ``observed_states`` can supply already-solved
    duals for (x, y) against the same reference.
    """
    if x.d != y.d:
        raise DimensionMismatch("samples must share a dimension")
    if cfg.resamples < 50:
        raise ValueError("resamples must be at least 50")
    pool = np.vstack([x.points, y.points])
    half = pool.shape[0] // 2
    if half < 2:
        raise InsufficientData("pooled sample is too small to split into two halves")
    n_eff = min(x.n, y.n)
    if reference is None:
        reference = reference_sample(cfg, n_eff, x.d)
    if mc is None:
        mc = mc_sample(cfg, x.d)

    if observed_states is not None:
        state_x, state_y = observed_states
    else:
        state_x = sinkhorn(reference, x, cfg.epsilon, cfg.sinkhorn_tol, cfg.sinkhorn_max_iter)
        state_y = sinkhorn(reference, y, cfg.epsilon, cfg.sinkhorn_tol, cfg.sinkhorn_max_iter)
    e_obs, f_obs = _pair_statistics(reference, mc, x, state_x, y, state_y, n_eff)

    g_pool = np.concatenate([state_x.g, state_y.g])
    f_warm = 0.5 * (state_x.f + state_y.f)
    pool_cost = half_sq_dists(reference.points, pool)
    base_rng = SeededRng(cfg.seed, STREAM_NULL)

    def one_replicate(b: int):
        gen = base_rng.substream(b).generator()
        order = gen.permutation(pool.shape[0])
        ia, ib = order[:half], order[half : 2 * half]
        xa = PointCloud(pool[ia])
        xb = PointCloud(pool[ib])
        state_a = sinkhorn(
            reference, xa, cfg.epsilon, cfg.sinkhorn_tol, cfg.sinkhorn_max_iter,
            init=(f_warm, g_pool[ia]), cost=np.ascontiguousarray(pool_cost[:, ia]),
        )
        state_b = sinkhorn(
            reference, xb, cfg.epsilon, cfg.sinkhorn_tol, cfg.sinkhorn_max_iter,
            init=(f_warm, g_pool[ib]), cost=np.ascontiguousarray(pool_cost[:, ib]),
        )
        return _pair_statistics(reference, mc, xa, state_a, xb, state_b, half)

    workers = _thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool_exec:
            results = list(pool_exec.map(one_replicate, range(cfg.resamples)))
    else:
        results = [one_replicate(b) for b in range(cfg.resamples)]
    null_e = np.sort(np.array([r[0] for r in results]))
    null_f = np.sort(np.array([r[1] for r in results]))
    return TestReport(
        e_n=e_obs,
        f_n=f_obs,
        null_e=null_e,
        null_f=null_f,
        p_e=p_value(e_obs, null_e),
        p_f=p_value(f_obs, null_f),
        n_effective=n_eff,
        fingerprint=cfg.fingerprint(),
    )


def null_distribution(x: PointCloud, y: PointCloud, cfg: RunConfig):
    """The sorted null replicate lists (E then F) of the pooled split-half
    scheme, using the same reference/Monte Carlo construction as the observed
    statistic."""
    report = eot_two_sample_test(x, y, cfg)
    return report.null_e, report.null_f
