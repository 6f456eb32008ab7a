"""Multivariate Q-Q and potential plots via optimal transport.

The package compares two multivariate samples by transporting a common
uniform-ball reference sample onto each of them, exactly (assignment
problem) or with entropic regularization (Sinkhorn), and emits componentwise
Q-Q plot data, potential plot data, diagonal-band diagnostics, and
resampling-based two-sample tests, alongside a geometric-quantile baseline.
"""

__version__ = "0.1.0"

from .analysis import (
    BandDiagnostic,
    PlotSet,
    SlopeFit,
    TestReport,
    band_fraction,
    build_potential_set,
    build_qq_sets,
    eot_two_sample_test,
    fit_slope,
    null_distribution,
    p_value,
    statistic_e,
    statistic_f,
)
from .entropic import (
    EotMap,
    EotPotential,
    SinkhornState,
    eot_map,
    eot_map_at,
    eot_potential,
    eot_potential_at,
    select_u0,
    sinkhorn,
)
from .errors import (
    BadSpec,
    ConstantColumn,
    DegenerateFit,
    DimensionMismatch,
    EmptyRestriction,
    InfeasibleDuals,
    InsufficientData,
    IoError,
    NonSquare,
    NumericalOverflow,
    OtqqError,
    ParseError,
    RaggedRows,
)
from .exact import (
    Assignment,
    CostMatrix,
    ExactPotentials,
    ExactTransportMap,
    cost_matrix,
    ot_dual_potentials,
    ot_quantile_map,
    solve_assignment,
)
from .geometric import geometric_qq, geometric_quantile, geometric_rank
from .model import (
    Ball,
    Box,
    CompactRegion,
    PointCloud,
    RunConfig,
    StandardizeTransform,
    bounding_region,
    restrict,
    standardize,
)
from .pipeline import (
    ExperimentConfig,
    ResultBundle,
    StageFailure,
    config_from_preset,
    run_experiment,
    write_bundle,
)
from .sampling import (
    AbsShiftGaussianSpec,
    GaussianSpec,
    ParetoSpec,
    ProductSpec,
    SeededRng,
    StudentTSpec,
    generate,
    inject_outliers,
    sample_unit_ball,
)

__all__ = [name for name in dir() if not name.startswith("_")]
