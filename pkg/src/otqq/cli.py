"""Command-line interface: run experiments, pretty-print reports, run oracles.

Exit code 0 on success; failures print a stage-labeled message to stderr and
exit nonzero.  Set OTQQ_THREADS to parallelize null-distribution replicates.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import OtqqError
from .model import RunConfig
from .pipeline import ExperimentConfig, StageFailure, config_from_preset, run_experiment, write_bundle
from .presets import preset_names


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otqq",
        description="Compare two multivariate samples with transport-based Q-Q and potential plots.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write its result bundle")
    src = run.add_argument_group("data sources")
    src.add_argument("--preset", choices=preset_names(), help="named scenario")
    src.add_argument("--x", dest="x_csv", help="CSV file for the first sample")
    src.add_argument("--y", dest="y_csv", help="CSV file for the second sample")
    run.add_argument("--methods", default=None, help="comma list from ot,eot,geom")
    run.add_argument("--n", type=int, default=None, help="sample size for generated data")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--epsilon", type=float, default=None, help="entropic regularization")
    run.add_argument("--eta", type=float, default=0.1, help="diagonal band half-width")
    run.add_argument("--resamples", type=int, default=200, help="null replicates B")
    run.add_argument("--mc-points", type=int, default=4096, help="Monte Carlo integration points")
    run.add_argument("--sinkhorn-tol", type=float, default=1e-7)
    run.add_argument("--sinkhorn-max-iter", type=int, default=50_000)
    run.add_argument("--standardize", action="store_true", default=None,
                     help="standardize each sample columnwise")
    run.add_argument("--no-standardize", dest="standardize", action="store_false")
    run.add_argument("--gaussian", choices=("standard", "matched"), default=None,
                     help="for CSV presets: compare against a standard or moment-matched Gaussian")
    run.add_argument("--k2-radius", type=float, default=None,
                     help="trim the reference sample to a ball of this radius")
    run.add_argument("--slope-line", type=float, default=None,
                     help="draw an extra reference line with this slope on Q-Q figures")
    run.add_argument("--no-test", action="store_true",
                     help="skip the resampled two-sample test (EOT runs only)")
    run.add_argument("--out", required=True, help="output directory")

    report = sub.add_parser("report", help="pretty-print a bundle summary.json")
    report.add_argument("summary", help="path to summary.json (or its directory)")

    oracle = sub.add_parser("oracle", help="run the brute-force oracles used by the tests")
    oracle.add_argument("--suite", choices=("assignment", "geometric", "all"), default="all")
    oracle.add_argument("--trials", type=int, default=50)
    oracle.add_argument("--seed", type=int, default=0)
    return parser


def _config_from_args(args) -> ExperimentConfig:
    run_cfg = RunConfig(
        seed=args.seed,
        epsilon=args.epsilon if args.epsilon is not None else 1e-2,
        sinkhorn_tol=args.sinkhorn_tol,
        sinkhorn_max_iter=args.sinkhorn_max_iter,
        mc_points=args.mc_points,
        resamples=args.resamples,
        eta=args.eta,
    )
    overrides = {}
    if args.methods:
        overrides["methods"] = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    if args.standardize is not None:
        overrides["standardize"] = args.standardize
    if args.k2_radius is not None:
        overrides["k2_radius"] = args.k2_radius
    if args.slope_line is not None:
        overrides["figure_slope"] = args.slope_line
    if args.no_test:
        overrides["run_test"] = False

    if args.preset:
        if args.gaussian is not None:
            from .presets import GaussianLikeY

            overrides["x_source"] = GaussianLikeY(args.gaussian)
        return config_from_preset(
            args.preset,
            run=run_cfg,
            n=args.n,
            csv_path=args.y_csv,
            epsilon=args.epsilon,
            **overrides,
        )
    if not args.x_csv or not args.y_csv:
        raise ValueError("either --preset or both --x and --y must be given")
    return ExperimentConfig(
        x_source=args.x_csv,
        y_source=args.y_csv,
        n=args.n if args.n is not None else 1000,
        run=run_cfg,
        label="csv-pair",
        **overrides,
    )


def _cmd_run(args) -> int:
    cfg = _config_from_args(args)
    bundle = run_experiment(cfg)
    manifest = write_bundle(bundle, args.out)
    total = sum(bundle.timings.values())
    print(f"wrote {len(manifest)} files to {args.out} ({total:.1f}s)")
    if bundle.test_report is not None:
        tr = bundle.test_report
        print(f"E_n = {tr.e_n:.4f} (p = {tr.p_e:.4g}); F_n = {tr.f_n:.4f} (p = {tr.p_f:.4g})")
    return 0


def _cmd_report(args) -> int:
    path = Path(args.summary)
    if path.is_dir():
        path = path / "summary.json"
    payload = json.loads(path.read_text())
    prov = payload["provenance"]
    print(f"label: {prov['label']}  seed: {prov['seed']}  methods: {','.join(prov['methods'])}")
    print(f"{'set':<28} {'pairs':>6} {'slope':>9} {'rmse':>9} {'band':>7} {'maxdev':>9}")
    for meta in payload["plot_sets"]:
        comp = meta["component"]
        name = f"{meta['method']} {comp if isinstance(comp, str) else 'c' + str(comp + 1)}"
        fit = meta["fit"]
        slope = f"{fit['slope']:.3f}" if fit else "-"
        rmse = f"{fit['rmse']:.3f}" if fit else "-"
        band = meta["band"]
        print(
            f"{name:<28} {meta['pairs']:>6} {slope:>9} {rmse:>9} "
            f"{band['fraction_inside']:>7.3f} {band['max_perpendicular_deviation']:>9.3f}"
        )
    tr = payload.get("test_report")
    if tr:
        print(
            f"E_n = {tr['e_n']:.4f} (p = {tr['p_e']:.4g}); "
            f"F_n = {tr['f_n']:.4f} (p = {tr['p_f']:.4g}); "
            f"B = {len(tr['null_e'])}, n_eff = {tr['n_effective']}"
        )
    return 0


def _cmd_oracle(args) -> int:
    from .oracles import assignment_suite, geometric_suite

    failures = 0
    if args.suite in ("assignment", "all"):
        passed, failed, worst = assignment_suite(trials=args.trials, seed=args.seed)
        status = "PASS" if failed == 0 else "FAIL"
        print(f"[{status}] assignment oracle: {passed}/{passed + failed} optimal (worst gap {worst:.2e})")
        failures += failed
    if args.suite in ("geometric", "all"):
        trials = max(5, args.trials // 5)
        passed, failed, worst = geometric_suite(trials=trials, seed=args.seed)
        status = "PASS" if failed == 0 else "FAIL"
        print(f"[{status}] geometric grid oracle: {passed}/{passed + failed} within one cell (worst {worst:.3f})")
        failures += failed
    return 0 if failures == 0 else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "report":
            return _cmd_report(args)
        return _cmd_oracle(args)
    except StageFailure as exc:
        print(f"error [{exc.stage}]: {exc.cause}", file=sys.stderr)
        return 2
    except (OtqqError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
