"""End-to-end experiment runner and result bundle serialization."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    PlotSet,
    STREAM_SUBSAMPLE,
    STREAM_X,
    STREAM_Y,
    TestReport,
    band_fraction,
    build_potential_set,
    build_qq_sets,
    eot_two_sample_test,
    fit_slope,
    mc_sample,
    reference_sample,
)
from .dataio import dump_json, load_csv, sha256_file, write_pairs_csv
from .entropic import eot_map, eot_potential, select_u0, sinkhorn
from .errors import DegenerateFit, IoError, OtqqError
from .exact import cost_matrix, map_from_assignment, ot_dual_potentials, solve_assignment
from .figures import render_svg
from .geometric import geometric_qq
from .model import Ball, PointCloud, RunConfig, bounding_region, restrict, standardize
from .presets import GaussianLikeY, preset_definitions
from .sampling import GaussianSpec, SeededRng, generate, inject_outliers

_METHODS = ("ot", "eot", "geom")


class StageFailure(OtqqError):
    """Wraps an error with the pipeline stage in which it occurred."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


@contextmanager
def _stage(name: str, timings: dict):
    start = time.perf_counter()
    try:
        yield
    except StageFailure:
        raise
    except Exception as exc:
        raise StageFailure(name, exc) from exc
    finally:
        timings[name] = timings.get(name, 0.0) + time.perf_counter() - start


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment deterministically."""

    x_source: object
    y_source: object
    methods: tuple[str, ...] = ("ot", "eot")
    run: RunConfig = field(default_factory=RunConfig)
    n: int = 1000
    standardize: bool = False
    k1_inflation: float = 0.0
    k2_radius: float | None = None
    outliers: tuple | None = None
    eot_epsilons: tuple[float, ...] | None = None
    figure_slope: float | None = None
    run_test: bool = True
    label: str = "custom"

    def __post_init__(self):
        methods = tuple(m.lower() for m in self.methods)
        if not methods:
            raise ValueError("at least one method is required")
        for m in methods:
            if m not in _METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {_METHODS}")
        object.__setattr__(self, "methods", methods)
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.k1_inflation < 0:
            raise ValueError("k1_inflation must be non-negative")
        if self.k2_radius is not None and not (0 < self.k2_radius <= 1):
            raise ValueError("k2_radius must be in (0, 1]")

    def epsilons(self) -> tuple[float, ...]:
        return self.eot_epsilons if self.eot_epsilons else (self.run.epsilon,)


def config_from_preset(
    name: str,
    run: RunConfig | None = None,
    n: int | None = None,
    csv_path=None,
    epsilon: float | None = None,
    **overrides,
) -> ExperimentConfig:
    """Instantiate a named preset; real-data presets need ``csv_path``.

    The preset's regularization default applies unless ``epsilon`` overrides
    it; other :class:`RunConfig` fields come from ``run``.
    """
    defs = preset_definitions()
    if name not in defs:
        raise ValueError(f"unknown preset {name!r}; available: {sorted(defs)}")
    spec = dict(defs[name])
    needs_csv = spec.pop("needs_csv", False)
    preset_epsilon = spec.pop("epsilon", None)
    run = run if run is not None else RunConfig()
    chosen = epsilon if epsilon is not None else preset_epsilon
    if chosen is not None:
        run = replace(run, epsilon=chosen)
    if needs_csv:
        if csv_path is None:
            raise ValueError(f"preset {name!r} compares a CSV dataset; pass csv_path")
        spec["y_source"] = csv_path
    spec.update(overrides)
    return ExperimentConfig(run=run, n=n if n is not None else 1000, label=name, **spec)


@dataclass
class ResultBundle:
    """All artifacts of one run: plot sets with their diagnostics and fits,
    the test report when entropic maps were computed, and provenance.

    ``timings`` is informational only and never serialized, so reruns of the
    same configuration produce byte-identical files.
    """

    plot_sets: list[PlotSet]
    diagnostics: list
    slopes: list
    test_report: TestReport | None
    provenance: dict
    timings: dict
    figure_slopes: list = field(default_factory=list)


def _resolve_source(source, n: int, stream: int, seed: int) -> PointCloud:
    if isinstance(source, PointCloud):
        return source
    if isinstance(source, (str, Path)):
        return load_csv(source)
    return generate(source, n, SeededRng(seed, stream))


def _subsample(cloud: PointCloud, size: int, rng: SeededRng) -> PointCloud:
    if cloud.n == size:
        return cloud
    idx = np.sort(rng.generator().choice(cloud.n, size=size, replace=False))
    return PointCloud(cloud.points[idx], names=cloud.names)


def run_experiment(cfg: ExperimentConfig) -> ResultBundle:
    """Execute the full pipeline for one configuration.

    Deterministic given the config: every random draw derives from
    ``cfg.run.seed`` through fixed stream ids.
    """
    timings: dict = {}
    run = cfg.run
    seed = run.seed

    with _stage("load", timings):
        y = _resolve_source(cfg.y_source, cfg.n, STREAM_Y, seed)
        if isinstance(cfg.x_source, GaussianLikeY):
            if cfg.x_source.mode == "matched":
                mean = y.points.mean(axis=0)
                cov = np.cov(y.points, rowvar=False, ddof=1)
                spec = GaussianSpec(mean=tuple(mean), cov=tuple(map(tuple, np.atleast_2d(cov))))
            else:
                spec = GaussianSpec(mean=(0.0,) * y.d, cov=tuple(map(tuple, np.eye(y.d))))
            x = generate(spec, y.n, SeededRng(seed, STREAM_X))
        else:
            x = _resolve_source(cfg.x_source, cfg.n, STREAM_X, seed)
        if x.d != y.d:
            raise ValueError(f"samples have different dimensions: {x.d} vs {y.d}")
        if cfg.outliers is not None:
            y = inject_outliers(y, cfg.outliers)

    with _stage("standardize", timings):
        if cfg.standardize:
            x, _ = standardize(x)
            y, _ = standardize(y)

    with _stage("regions", timings):
        k1 = bounding_region([x, y], cfg.k1_inflation)
        k2 = Ball(cfg.k2_radius) if cfg.k2_radius is not None else None

    with _stage("reference", timings):
        n_u = min(x.n, y.n)
        reference = reference_sample(run, n_u, x.d)

    plot_sets: list[PlotSet] = []
    figure_slopes: list[float | None] = []
    test_report: TestReport | None = None
    geometric_flagged = 0

    if "ot" in cfg.methods:
        with _stage("ot", timings):
            xs = _subsample(x, n_u, SeededRng(seed, STREAM_SUBSAMPLE))
            ys = _subsample(y, n_u, SeededRng(seed, STREAM_SUBSAMPLE).substream(1))
            sizes = (xs.n, ys.n, reference.n)
            assign_x = solve_assignment(cost_matrix(reference, xs))
            assign_y = solve_assignment(cost_matrix(reference, ys))
            map_x = map_from_assignment(reference, xs, assign_x)
            map_y = map_from_assignment(reference, ys, assign_y)
            qq = build_qq_sets(map_x, map_y, reference, region=k2, method="OT", sample_sizes=sizes)
            plot_sets.extend(qq)
            figure_slopes.extend([cfg.figure_slope] * len(qq))
            pot_x = ot_dual_potentials(reference, xs, assign_x)
            pot_y = ot_dual_potentials(reference, ys, assign_y)
            plot_sets.append(
                build_potential_set(
                    pot_x.phi_at_ref, pot_y.phi_at_ref, reference,
                    region=k2, method="OT", sample_sizes=sizes,
                )
            )
            figure_slopes.append(None)

    if "eot" in cfg.methods:
        with _stage("eot", timings):
            xk, _ = restrict(x, k1)
            yk, _ = restrict(y, k1)
            sizes = (xk.n, yk.n, reference.n)
            tag = k1.describe()
            for eps in cfg.epsilons():
                state_x = sinkhorn(reference, xk, eps, run.sinkhorn_tol, run.sinkhorn_max_iter)
                state_y = sinkhorn(reference, yk, eps, run.sinkhorn_tol, run.sinkhorn_max_iter)
                method = f"EOT(eps={eps:g})"
                qq = build_qq_sets(
                    eot_map(state_x, xk), eot_map(state_y, yk), reference,
                    method=method, sample_sizes=sizes, region_tag=tag,
                )
                plot_sets.extend(qq)
                figure_slopes.extend([cfg.figure_slope] * len(qq))
                pot_x = eot_potential(state_x, xk, select_u0(reference, state_x, xk))
                pot_y = eot_potential(state_y, yk, select_u0(reference, state_y, yk))
                plot_sets.append(
                    build_potential_set(
                        pot_x, pot_y, reference,
                        method=method, sample_sizes=sizes, region_tag=tag,
                    )
                )
                figure_slopes.append(None)
                if cfg.run_test and eps == run.epsilon and test_report is None:
                    mc = mc_sample(run, x.d)
                    test_report = eot_two_sample_test(
                        xk, yk, run, reference=reference, mc=mc,
                        observed_states=(state_x, state_y),
                    )

    if "geom" in cfg.methods:
        with _stage("geometric", timings):
            matched, flagged = geometric_qq(x, y)
            geometric_flagged = len(flagged)
            for i in range(x.d):
                plot_sets.append(
                    PlotSet(
                        pairs=np.column_stack([matched[:, i], y.points[:, i]]),
                        component=i,
                        method="Geometric",
                        region_tag="full sample",
                        sample_sizes=(x.n, y.n, 0),
                    )
                )
                figure_slopes.append(cfg.figure_slope)

    with _stage("diagnostics", timings):
        diagnostics = [band_fraction(s, run.eta) for s in plot_sets]
        slopes = []
        for s in plot_sets:
            try:
                slopes.append(fit_slope(s))
            except DegenerateFit:
                slopes.append(None)

    provenance = {
        "package": f"otqq {__version__}",
        "numpy": np.__version__,
        "label": cfg.label,
        "seed": int(seed),
        "methods": list(cfg.methods),
        "standardize": bool(cfg.standardize),
        "n": int(cfg.n),
        "k1_inflation": float(cfg.k1_inflation),
        "k2_radius": cfg.k2_radius,
        "eot_epsilons": [float(e) for e in cfg.epsilons()],
        "run_config": {
            "seed": int(run.seed),
            "epsilon": float(run.epsilon),
            "sinkhorn_tol": float(run.sinkhorn_tol),
            "sinkhorn_max_iter": int(run.sinkhorn_max_iter),
            "mc_points": int(run.mc_points),
            "resamples": int(run.resamples),
            "eta": float(run.eta),
        },
        "fingerprint": run.fingerprint(),
        "geometric_not_converged": geometric_flagged,
    }
    return ResultBundle(
        plot_sets=plot_sets,
        diagnostics=diagnostics,
        slopes=slopes,
        test_report=test_report,
        provenance=provenance,
        timings=timings,
        figure_slopes=figure_slopes,
    )


def _slug(plot_set: PlotSet) -> str:
    method = plot_set.method.lower()
    method = method.replace("(eps=", "_").replace(")", "")
    method = "".join(ch if ch.isalnum() or ch in ".-" else "_" for ch in method)
    comp = (
        plot_set.component
        if isinstance(plot_set.component, str)
        else f"qq_component_{plot_set.component + 1}"
    )
    return f"{method}_{comp}"


def _summary_payload(bundle: ResultBundle) -> dict:
    sets_meta = []
    for plot_set, diag, slope in zip(bundle.plot_sets, bundle.diagnostics, bundle.slopes):
        sets_meta.append(
            {
                "component": plot_set.component
                if isinstance(plot_set.component, str)
                else int(plot_set.component),
                "method": plot_set.method,
                "region": plot_set.region_tag,
                "pairs": int(plot_set.pairs.shape[0]),
                "sample_sizes": list(plot_set.sample_sizes),
                "csv": f"{_slug(plot_set)}.csv",
                "figure": f"{_slug(plot_set)}.svg",
                "band": {
                    "eta": diag.eta,
                    "fraction_inside": diag.fraction_inside,
                    "max_perpendicular_deviation": diag.max_perpendicular_deviation,
                },
                "fit": None
                if slope is None
                else {"slope": slope.slope, "intercept": slope.intercept, "rmse": slope.rmse},
            }
        )
    payload = {
        "provenance": bundle.provenance,
        "plot_sets": sets_meta,
        "test_report": None,
    }
    if bundle.test_report is not None:
        tr = bundle.test_report
        payload["test_report"] = {
            "e_n": tr.e_n,
            "f_n": tr.f_n,
            "p_e": tr.p_e,
            "p_f": tr.p_f,
            "n_effective": tr.n_effective,
            "fingerprint": tr.fingerprint,
            "null_e": [float(v) for v in tr.null_e],
            "null_f": [float(v) for v in tr.null_f],
        }
    return payload


def write_bundle(bundle: ResultBundle, out_dir) -> list[dict]:
    """Write one CSV and one SVG figure per plot set, plus summary.json.

    Returns the manifest (also written as manifest.json): relative path,
    sha256, and size of every emitted file.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(out, str(exc)) from exc
    figure_slopes = bundle.figure_slopes or [None] * len(bundle.plot_sets)
    names: list[str] = []
    try:
        for plot_set, fig_slope in zip(bundle.plot_sets, figure_slopes):
            slug = _slug(plot_set)
            write_pairs_csv(out / f"{slug}.csv", plot_set.pairs)
            names.append(f"{slug}.csv")
            svg = render_svg(plot_set, extra_slope=fig_slope)
            (out / f"{slug}.svg").write_text(svg)
            names.append(f"{slug}.svg")
        (out / "summary.json").write_text(dump_json(_summary_payload(bundle)))
        names.append("summary.json")
    except OSError as exc:
        raise IoError(out, str(exc)) from exc
    manifest = [
        {
            "path": name,
            "sha256": sha256_file(out / name),
            "bytes": (out / name).stat().st_size,
        }
        for name in names
    ]
    (out / "manifest.json").write_text(dump_json(manifest))
    return manifest
