"""Scalable exact variance-component tests for gene-environment interaction."""

from .exceptions import (
    ConditioningError,
    GenotypeError,
    NumericalError,
    ParameterError,
    ParseError,
    RankError,
    SeagleError,
    ShapeError,
)
from .linalg import (
    ImplicitProjector,
    WoodburyOperator,
    apply_at,
    apply_vinv,
    build_projector,
    build_woodbury,
)
from .pvalue import WeightedChiSq, pvalue_davies, pvalue_liu, survival_mc
from .reml import EmConfig, NullFit, fit_null
from .simgen import ExperimentReport, SimConfig, run_experiment
from .vctest import TestInput, VcTestResult, build_input, run_test

__all__ = [
    "ConditioningError",
    "EmConfig",
    "ExperimentReport",
    "GenotypeError",
    "ImplicitProjector",
    "NullFit",
    "NumericalError",
    "ParameterError",
    "ParseError",
    "RankError",
    "SeagleError",
    "ShapeError",
    "SimConfig",
    "TestInput",
    "VcTestResult",
    "WeightedChiSq",
    "WoodburyOperator",
    "apply_at",
    "apply_vinv",
    "build_input",
    "build_projector",
    "build_woodbury",
    "fit_null",
    "pvalue_davies",
    "pvalue_liu",
    "run_experiment",
    "run_test",
    "survival_mc",
]

__version__ = "0.1.0"
