"""Symmetric banded solves for the penalized normal equations.

``B^T W B + 2 n lambda sigma^2 D`` has bandwidth ``p - 1`` because each
B-spline overlaps only its ``p - 1`` neighbours, so factorization, solves,
and the smoother trace all cost O(K p^2).
"""

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .exceptions import FactorizationError


@dataclass(frozen=True)
class BandedSPD:
    """Symmetric matrix in lower band storage ``band[d, j] = A[j + d, j]``."""

    band: np.ndarray

    @property
    def dim(self):
        return self.band.shape[1]

    @property
    def bandwidth(self):
        return self.band.shape[0] - 1

    @classmethod
    def from_dense(cls, a, bandwidth):
        a = np.asarray(a, dtype=np.float64)
        m = a.shape[0]
        band = np.zeros((bandwidth + 1, m))
        for d in range(bandwidth + 1):
            idx = np.arange(m - d)
            band[d, : m - d] = a[idx + d, idx]
        return cls(band)

    def toarray(self):
        m = self.dim
        out = np.zeros((m, m))
        for d in range(self.band.shape[0]):
            idx = np.arange(m - d)
            out[idx + d, idx] = self.band[d, : m - d]
            out[idx, idx + d] = self.band[d, : m - d]
        return out


@dataclass(frozen=True)
class BandCholesky:
    """Lower band Cholesky factor ``L`` with ``A = L L^T``."""

    band: np.ndarray

    @property
    def dim(self):
        return self.band.shape[1]

    def toarray(self):
        m = self.dim
        out = np.zeros((m, m))
        for d in range(self.band.shape[0]):
            idx = np.arange(m - d)
            out[idx + d, idx] = self.band[d, : m - d]
        return out


def band_cholesky(mat):
    """Factor a banded SPD matrix.

    Raises
    ------
    FactorizationError
        On the first non-positive pivot; ``err.pivot`` holds its index.
    """
    band = mat.band if isinstance(mat, BandedSPD) else np.asarray(mat, dtype=np.float64)
    L, info = kernels.band_cholesky(np.ascontiguousarray(band, dtype=np.float64))
    if info >= 0:
        raise FactorizationError(f"matrix not positive definite (pivot {info})", pivot=int(info))
    return BandCholesky(L)


def penalized_factor(B, w, D, scale):
    """Cholesky-equivalent factor of ``B^T diag(w) B + scale * D``.

    Computed by orthogonal reduction of the stacked rows ``sqrt(w) B`` and
    ``sqrt(scale) E`` (``D = E^T E``) instead of factoring the sum. The
    normal-equation route loses the penalty null space once ``scale * D``
    dwarfs ``B^T W B`` by ~1e16; this one only sees the square root of that
    ratio.

    Raises
    ------
    FactorizationError
        If the system is numerically singular; ``err.pivot`` is the column.
    """
    if D.root is None:
        raise ValueError("penalty matrix carries no quadrature rows")
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (B.n,) or B.ncols != D.dim:
        raise ValueError("dimensions of design, weights, and penalty do not conform")
    vals = np.vstack((B.values, D.root.values))
    first = np.concatenate((B.first, D.root.first))
    sw = np.concatenate((np.sqrt(w), np.sqrt(scale * D.root_weights)))
    # the Givens sweep keeps fill inside the band only for rows ordered by first column
    order = np.argsort(first, kind="stable")
    L = kernels.band_qr_rows(vals[order], first[order], sw[order], D.dim)
    diag = L[0]
    tiny = diag.size * np.finfo(float).eps * max(diag.max(), 0.0)
    bad = np.flatnonzero(~(diag > tiny))
    if bad.size:
        raise FactorizationError(f"penalized system singular (column {bad[0]})", pivot=int(bad[0]))
    return BandCholesky(L)


def band_solve(factor, rhs):
    """Solve ``A x = rhs`` from the Cholesky factor; ``rhs`` may be 1-D or 2-D."""
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.shape[0] != factor.dim:
        raise ValueError(f"rhs has {rhs.shape[0]} rows, factor has dimension {factor.dim}")
    if rhs.ndim == 1:
        return kernels.band_cho_solve(factor.band, rhs)
    return np.column_stack([kernels.band_cho_solve(factor.band, col) for col in rhs.T])


def band_inverse_band(factor):
    """Entries of ``A^{-1}`` inside the band of ``A`` (lower storage)."""
    return kernels.band_selinv(factor.band)


def weighted_gram(B, w):
    """Lower band of ``B^T diag(w) B``."""
    return kernels.band_gram(B.values, B.first, np.asarray(w, dtype=np.float64), B.ncols)


def smoother_trace(B, W, factor):
    """``Tr[B M^{-1} B^T W]`` where ``factor`` is the Cholesky factor of ``M``.

    Equals ``Tr[M^{-1} G]`` with ``G = B^T W B``. Both ``M^{-1}`` (restricted
    to the band) and ``G`` are banded, so the trace is a band dot product.
    """
    W = np.asarray(W, dtype=np.float64)
    if W.shape != (B.n,) or B.ncols != factor.dim:
        raise ValueError("dimensions of design, weights, and factor do not conform")
    G = weighted_gram(B, W)
    S = band_inverse_band(factor)
    bw = min(G.shape[0], S.shape[0])
    diag = float(np.dot(S[0], G[0]))
    off = float(np.sum(S[1:bw] * G[1:bw]))
    return diag + 2.0 * off
