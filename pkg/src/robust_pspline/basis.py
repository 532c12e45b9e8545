"""Knot placement and B-spline basis evaluation.

Basis functions are evaluated with the triangular Cox-de Boor recursion.
The augmented knot sequence repeats each boundary knot ``p`` times, so a
spline of order ``p`` with ``K`` interior knots has ``K + p`` basis
functions, and at most ``p`` of them are non-zero at any point.
"""

from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .exceptions import DegenerateDesignError, DomainError, OrderError


@dataclass(frozen=True)
class KnotVector:
    """Interior knots, boundary, and spline order.

    Attributes
    ----------
    interior : ndarray
        Strictly increasing interior knots ``t_1 < ... < t_K``.
    lo, hi : float
        Boundary knots ``a < b``.
    order : int
        Spline order ``p`` (degree ``p - 1``).
    """

    interior: np.ndarray
    lo: float
    hi: float
    order: int
    augmented: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        interior = np.array(self.interior, dtype=np.float64).ravel()
        interior.setflags(write=False)
        object.__setattr__(self, "interior", interior)
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if int(self.order) != self.order or self.order < 1:
            raise OrderError(f"spline order must be a positive integer, got {self.order}")
        object.__setattr__(self, "order", int(self.order))
        if not self.lo < self.hi:
            raise DegenerateDesignError(f"empty domain [{self.lo}, {self.hi}]")
        pts = np.concatenate(([self.lo], interior, [self.hi]))
        if not np.all(np.diff(pts) > 0):
            raise DegenerateDesignError("interior knots must be strictly increasing inside (a, b)")
        p = self.order
        aug = np.concatenate((np.full(p, self.lo), interior, np.full(p, self.hi)))
        aug.setflags(write=False)
        object.__setattr__(self, "augmented", aug)

    @property
    def n_interior(self):
        return self.interior.size

    @property
    def dim(self):
        """Number of basis functions, ``K + p``."""
        return self.interior.size + self.order

    @property
    def breakpoints(self):
        """Distinct knots ``a, t_1, ..., t_K, b``."""
        return np.concatenate(([self.lo], self.interior, [self.hi]))

    def __eq__(self, other):
        if not isinstance(other, KnotVector):
            return NotImplemented
        return (
            self.order == other.order
            and self.lo == other.lo
            and self.hi == other.hi
            and np.array_equal(self.interior, other.interior)
        )

    def __hash__(self):
        return hash((self.order, self.lo, self.hi, self.interior.tobytes()))


@dataclass(frozen=True)
class DesignMatrix:
    """Row-banded B-spline design matrix.

    Row ``i`` has its non-zero entries ``values[i, :]`` in columns
    ``first[i], ..., first[i] + p - 1``.
    """

    values: np.ndarray
    first: np.ndarray
    ncols: int

    @property
    def shape(self):
        return (self.values.shape[0], self.ncols)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    def toarray(self):
        n, p = self.values.shape
        out = np.zeros((n, self.ncols))
        cols = self.first[:, None] + np.arange(p)[None, :]
        out[np.arange(n)[:, None], cols] = self.values
        return out

    def __matmul__(self, beta):
        beta = np.asarray(beta, dtype=np.float64)
        if beta.shape != (self.ncols,):
            raise ValueError(f"expected coefficient vector of length {self.ncols}, got {beta.shape}")
        return kernels.band_matvec_rows(self.values, self.first, beta)


def _quantile(sorted_vals, probs):
    # linear interpolation between order statistics (numpy's default rule)
    return np.quantile(sorted_vals, probs)


def make_knots(xs, p=4, k_max=40):
    """Place interior knots at quantiles of the unique design points.

    Uses ``K = min(floor(n_unique / 4), k_max)`` interior knots, with knot
    ``k`` at the ``(k + 1) / (K + 2)`` sample quantile of the unique ``xs``.

    Raises
    ------
    DegenerateDesignError
        If there are fewer than ``p + 1`` unique design points.
    """
    xs = np.asarray(xs, dtype=np.float64).ravel()
    if xs.size == 0:
        raise DegenerateDesignError("no design points")
    if not np.all(np.isfinite(xs)):
        raise DegenerateDesignError("design points must be finite")
    if int(k_max) != k_max or k_max < 1:
        raise ValueError(f"k_max must be a positive integer, got {k_max}")
    if int(p) != p or p < 1:
        raise OrderError(f"spline order must be a positive integer, got {p}")
    uniq = np.unique(xs)
    if uniq.size < p + 1:
        raise DegenerateDesignError(
            f"need at least p + 1 = {p + 1} unique design points, got {uniq.size}"
        )
    K = min(uniq.size // 4, int(k_max))
    probs = (np.arange(1, K + 1) + 1.0) / (K + 2.0)
    interior = _quantile(uniq, probs) if K else np.empty(0)
    try:
        return KnotVector(interior, uniq[0], uniq[-1], int(p))
    except DegenerateDesignError as exc:
        raise DegenerateDesignError(f"quantile knots collapsed: {exc}") from exc


def _check_domain(knots, x):
    bad = np.flatnonzero(~((x >= knots.lo) & (x <= knots.hi)))
    if bad.size:
        i = int(bad[0])
        raise DomainError(
            f"x[{i}] = {x[i]!r} outside spline domain [{knots.lo}, {knots.hi}]", index=i
        )


def _rows(knots, x, m):
    p = knots.order
    if int(m) != m or m < 0 or m >= p:
        raise OrderError(f"derivative order must satisfy 0 <= m < p = {p}, got {m}")
    _check_domain(knots, x)
    return kernels.bspline_rows(knots.augmented, p, x, int(m))


def eval_basis(knots, x):
    """All ``K + p`` basis values at a scalar ``x`` in ``[a, b]``."""
    return eval_basis_deriv(knots, x, 0)


def eval_basis_deriv(knots, x, m):
    """``m``-th derivatives of all basis functions at scalar ``x``.

    Basis functions are right-continuous at interior knots; ``x = b`` is
    assigned to the last knot interval.
    """
    xv = np.array([x], dtype=np.float64)
    if xv.size != 1:
        raise ValueError("x must be a scalar")
    vals, first = _rows(knots, xv, m)
    out = np.zeros(knots.dim)
    out[first[0] : first[0] + knots.order] = vals[0]
    return out


def design_matrix(knots, xs, deriv=0):
    """Row-banded matrix with row ``i`` equal to the basis at ``xs[i]``.

    ``deriv`` selects derivative rows instead of values. Domain errors
    carry the offending row index in ``DomainError.index``.
    """
    xs = np.asarray(xs, dtype=np.float64).ravel()
    vals, first = _rows(knots, xs, deriv)
    return DesignMatrix(vals, first, knots.dim)
