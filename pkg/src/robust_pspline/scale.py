"""Preliminary residual-scale estimates that need no regression fit.

Pseudo-residuals predict each interior response from the straight line
through its two neighbours; they remove a smooth trend locally and
expose the noise. Difference-based estimates use successive ``ys``
directly.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateDesignError, InsufficientDataError

IQR_CONSISTENCY = 1.349
MAD_CONSISTENCY = 0.6745

SCALE_METHODS = ("iqr", "mad", "diff_median", "gasser")


@dataclass(frozen=True)
class PseudoResiduals:
    eps_hat: np.ndarray
    w: np.ndarray
    s: np.ndarray
    std_factor: np.ndarray

    @property
    def standardized(self):
        return self.eps_hat / self.std_factor

    def __len__(self):
        return self.eps_hat.size


def pseudo_residuals(xs, ys, allow_ties=False):
    """Two-neighbour interpolation residuals for sorted design points.

    Parameters
    ----------
    xs : array_like
        Design points in ascending order; strictly increasing unless
        ``allow_ties``.
    ys : array_like
        Responses aligned with ``xs``.
    allow_ties : bool
        Accept non-decreasing ``xs``. A triple whose outer points coincide
        gets ``w = s = 1/2``; any convex pair is unbiased there.

    Raises
    ------
    InsufficientDataError
        Fewer than three observations.
    DegenerateDesignError
        ``xs`` unsorted, or containing ties when ``allow_ties`` is false.
    """
    xs = np.asarray(xs, dtype=np.float64).ravel()
    ys = np.asarray(ys, dtype=np.float64).ravel()
    if xs.size != ys.size:
        raise ValueError(f"xs and ys differ in length ({xs.size} vs {ys.size})")
    if xs.size < 3:
        raise InsufficientDataError(f"pseudo-residuals need n >= 3, got {xs.size}")
    gaps = np.diff(xs)
    if allow_ties:
        if np.any(gaps < 0):
            raise DegenerateDesignError("xs must be sorted ascending")
    elif np.any(gaps <= 0):
        raise DegenerateDesignError("xs must be strictly increasing")
    span = xs[2:] - xs[:-2]
    flat = span == 0
    safe = np.where(flat, 1.0, span)
    w = np.where(flat, 0.5, (xs[2:] - xs[1:-1]) / safe)
    s = np.where(flat, 0.5, (xs[1:-1] - xs[:-2]) / safe)
    eps = w * ys[:-2] + s * ys[2:] - ys[1:-1]
    return PseudoResiduals(eps, w, s, np.sqrt(w * w + s * s + 1.0))


def gasser_variance(pr):
    """Mean of squared standardized pseudo-residuals (estimates sigma^2)."""
    if len(pr) < 1:
        raise InsufficientDataError("need at least one pseudo-residual")
    z = pr.standardized
    return float(np.mean(z * z))


def robust_scale(pr, method="iqr"):
    """Gaussian-consistent IQR or MAD scale of standardized pseudo-residuals.

    Needs ``n >= 5`` observations, i.e. at least three pseudo-residuals.
    """
    if len(pr) < 3:
        raise InsufficientDataError(
            f"robust scale needs n >= 5 observations, got {len(pr) + 2}"
        )
    z = pr.standardized
    if method == "iqr":
        q1, q3 = np.percentile(z, [25.0, 75.0])
        return float((q3 - q1) / IQR_CONSISTENCY)
    if method == "mad":
        return float(np.median(np.abs(z - np.median(z))) / MAD_CONSISTENCY)
    raise ValueError(f"unknown robust scale method {method!r}")


def diff_median_scale(ys):
    """``median|y[i+1] - y[i]| / (sqrt(2) * 0.6745)`` for ``ys`` ordered by x."""
    ys = np.asarray(ys, dtype=np.float64).ravel()
    if ys.size < 2:
        raise InsufficientDataError(f"difference scale needs n >= 2, got {ys.size}")
    return float(np.median(np.abs(np.diff(ys))) / (np.sqrt(2.0) * MAD_CONSISTENCY))


def estimate_scale(xs, ys, method="iqr", allow_ties=False):
    """Dispatch to one of :data:`SCALE_METHODS`; returns sigma (not sigma^2)."""
    if method == "diff_median":
        return diff_median_scale(ys)
    pr = pseudo_residuals(xs, ys, allow_ties=allow_ties)
    if method == "gasser":
        return float(np.sqrt(gasser_variance(pr)))
    return robust_scale(pr, method)
