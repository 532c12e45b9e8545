"""Robust (M-type) penalized B-spline regression."""

from ._backend import BACKEND
from .basis import DesignMatrix, KnotVector, design_matrix, eval_basis, eval_basis_deriv, make_knots
from .fitter import FitConfig, FitResult, fit, gcv_score, irwls, predict, select_lambda
from .loss import LossSpec, huber, quadratic, smoothed_huber, tukey
from .penalty import PenaltyMatrix, penalty_matrix, roughness
from .scale import diff_median_scale, estimate_scale, gasser_variance, pseudo_residuals, robust_scale

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DesignMatrix",
    "FitConfig",
    "FitResult",
    "KnotVector",
    "LossSpec",
    "PenaltyMatrix",
    "design_matrix",
    "diff_median_scale",
    "estimate_scale",
    "eval_basis",
    "eval_basis_deriv",
    "fit",
    "gasser_variance",
    "gcv_score",
    "huber",
    "irwls",
    "make_knots",
    "penalty_matrix",
    "predict",
    "pseudo_residuals",
    "quadratic",
    "robust_scale",
    "roughness",
    "select_lambda",
    "smoothed_huber",
    "tukey",
]
