"""Named experiment scenarios, mirroring the simulated and real-data setups."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampling import (
    AbsShiftGaussianSpec,
    GaussianSpec,
    ParetoSpec,
    ProductSpec,
    StudentTSpec,
)


@dataclass(frozen=True)
class GaussianLikeY:
    """Placeholder X source: a Gaussian sized to the loaded Y sample.

    ``mode="standard"`` draws from N(0, I) (pair it with standardized data);
    ``mode="matched"`` learns mean and covariance from the raw Y sample.
    """

    mode: str = "standard"

    def __post_init__(self):
        if self.mode not in ("standard", "matched"):
            raise ValueError("mode must be 'standard' or 'matched'")


_TRIVARIATE_COV = (
    (1.0, 0.5, 0.2),
    (0.5, 1.0, 0.0),
    (0.2, 0.0, 1.0),
)

_CORRELATED_COV = (
    (1.0, 0.9, 0.0),
    (0.9, 1.0, 0.0),
    (0.0, 0.0, 1.0),
)


def _std_gaussian(d: int) -> GaussianSpec:
    return GaussianSpec(mean=(0.0,) * d, cov=tuple(tuple(np.eye(d)[i]) for i in range(d)))


def preset_definitions() -> dict:
    """Mapping of preset name to its config field overrides."""
    return {
        "identical-gaussian": {
            "x_source": GaussianSpec(mean=(0.0, 0.0, 0.0), cov=_TRIVARIATE_COV),
            "y_source": GaussianSpec(mean=(0.0, 0.0, 0.0), cov=_TRIVARIATE_COV),
            "methods": ("ot", "eot"),
            "epsilon": 1e-2,
        },
        "correlated-gaussian": {
            "x_source": _std_gaussian(3),
            "y_source": GaussianSpec(mean=(0.0, 0.0, 0.0), cov=_CORRELATED_COV),
            "methods": ("ot", "eot"),
            "epsilon": 1e-2,
        },
        "scaled-gaussian": {
            "x_source": _std_gaussian(3),
            "y_source": GaussianSpec(
                mean=(0.0, 0.0, 0.0),
                cov=((1.0, 0.0, 0.0), (0.0, 4.0, 0.0), (0.0, 0.0, 1.0)),
            ),
            "methods": ("ot", "eot"),
            "epsilon": 1e-2,
            "figure_slope": 2.0,
        },
        "outliers": {
            "x_source": _std_gaussian(3),
            "y_source": _std_gaussian(3),
            "outliers": ((8.0, 8.0, 8.0), (9.0, 9.0, 9.0), (10.0, 10.0, 10.0)),
            "methods": ("ot", "eot"),
            "epsilon": 1e-3,
        },
        "gaussian-vs-student-t": {
            "x_source": _std_gaussian(3),
            "y_source": StudentTSpec(
                mean=(0.0, 0.0, 0.0),
                shape=((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)),
                dof=3.2,
            ),
            "methods": ("ot", "eot"),
            "epsilon": 1e-3,
        },
        "gaussian-vs-pareto-pushforward": {
            "x_source": AbsShiftGaussianSpec(dim=3),
            "y_source": ParetoSpec(alphas=(3.0, 3.0, 3.0)),
            "methods": ("ot", "eot"),
            "epsilon": 1e-3,
        },
        "epsilon-sweep": {
            "x_source": _std_gaussian(3),
            "y_source": _std_gaussian(3),
            "methods": ("eot",),
            "epsilon": 1e-2,
            "eot_epsilons": (1e-3, 1e-2, 1e-1),
        },
        "geometric-comparison": {
            "x_source": _std_gaussian(5),
            "y_source": ProductSpec(
                marginals=(
                    _std_gaussian(1),
                    _std_gaussian(1),
                    _std_gaussian(1),
                    _std_gaussian(1),
                    ParetoSpec(alphas=(3.2,)),
                )
            ),
            "methods": ("ot", "eot", "geom"),
            "epsilon": 0.5e-2,
        },
        "iris": {
            "x_source": GaussianLikeY("standard"),
            "y_source": None,  # CSV path supplied by the caller (one variety)
            "methods": ("ot", "eot"),
            "epsilon": 1e-3,
            "standardize": True,
            "needs_csv": True,
        },
        "rice": {
            "x_source": GaussianLikeY("standard"),
            "y_source": None,  # CSV path supplied by the caller
            "methods": ("ot", "eot"),
            "epsilon": 0.5e-2,
            "standardize": True,
            "needs_csv": True,
        },
    }


def preset_names() -> list[str]:
    return sorted(preset_definitions().keys())
