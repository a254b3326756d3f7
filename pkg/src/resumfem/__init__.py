"""Borel-Pade-Laplace time integration for 1D finite element parabolic problems."""

from __future__ import annotations

from .continuation import ContinuationParams, ContinuationTrace, advance, fixed_step_integrate, integrated_residual
from .fem import ConvectionTensor, FemSpace, Mesh1D, Operators, assemble, build_space, lump_mass, reduce_dirichlet
from .linalg import QuadratureRule, cond2, gauss_rule, singular_values, solve_dense, svd
from .recipes import RECIPES, ExperimentConfig, TableReport, run_recipe
from .resummation import FlowEvaluator, borel, flow, flow_derivative, pade, pade_scalar, partial_sum_radius, residual
from .series import (
    BurgersModel,
    HeatModel,
    StabilizationPlan,
    compute_terms,
    dmp_norm,
    dmp_threshold,
    find_alpha0,
    find_ratio,
)

__version__ = "0.1.0"

__all__ = [
    "BurgersModel", "ContinuationParams", "ContinuationTrace", "ConvectionTensor", "ExperimentConfig", "FemSpace",
    "FlowEvaluator", "HeatModel", "Mesh1D", "Operators", "QuadratureRule", "RECIPES", "StabilizationPlan",
    "TableReport", "advance", "assemble", "borel", "build_space", "compute_terms", "cond2", "dmp_norm",
    "dmp_threshold", "find_alpha0", "find_ratio", "fixed_step_integrate", "flow", "flow_derivative", "gauss_rule",
    "integrated_residual", "lump_mass", "pade", "pade_scalar", "partial_sum_radius", "reduce_dirichlet",
    "residual", "run_recipe", "singular_values", "solve_dense", "svd",
]
