"""Integrated squared-derivative roughness penalty for B-spline coefficients."""

from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .basis import design_matrix
from .exceptions import OrderError


@dataclass(frozen=True)
class PenaltyMatrix:
    """Symmetric banded ``D[i, j] = integral of B_i^(q) B_j^(q)`` over [a, b].

    ``band`` uses lower storage: ``band[d, j] = D[j + d, j]``, ``d < p``.
    ``root`` holds quadrature rows ``E`` with ``D = E^T diag(root_weights) E``,
    used to factor penalized systems without squaring the penalty.
    """

    band: np.ndarray
    q: int
    knots: object
    root: object = field(default=None, repr=False, compare=False)
    root_weights: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def dim(self):
        return self.band.shape[1]

    @property
    def bandwidth(self):
        return self.band.shape[0] - 1

    def toarray(self):
        m = self.dim
        out = np.zeros((m, m))
        for d in range(self.band.shape[0]):
            idx = np.arange(m - d)
            out[idx + d, idx] = self.band[d, : m - d]
            out[idx, idx + d] = self.band[d, : m - d]
        return out

    def matvec(self, beta):
        beta = np.asarray(beta, dtype=np.float64)
        m = self.dim
        out = self.band[0] * beta
        for d in range(1, self.band.shape[0]):
            out[d:] += self.band[d, : m - d] * beta[: m - d]
            out[: m - d] += self.band[d, : m - d] * beta[d:]
        return out


def penalty_matrix(knots, q=2):
    """Exact penalty matrix for derivative order ``q``.

    On each knot interval the integrand is a polynomial of degree
    ``2 (p - 1 - q)``, so ``p - q`` Gauss-Legendre nodes integrate it exactly.
    """
    p = knots.order
    if int(q) != q or q < 1 or q >= p:
        raise OrderError(f"penalty order must satisfy 1 <= q < p = {p}, got {q}")
    q = int(q)
    nodes, gw = np.polynomial.legendre.leggauss(p - q)
    brk = knots.breakpoints
    half = 0.5 * np.diff(brk)
    mid = 0.5 * (brk[:-1] + brk[1:])
    xs = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    ws = (half[:, None] * gw[None, :]).ravel()
    rows = design_matrix(knots, xs, deriv=q)
    band = kernels.band_gram(rows.values, rows.first, ws, knots.dim)
    band.setflags(write=False)
    ws.setflags(write=False)
    return PenaltyMatrix(band, q, knots, rows, ws)


def roughness(pen, beta):
    """Quadratic form ``beta^T D beta``.

    Summed as ``sum_g w_g (f^(q)(x_g))^2`` over the quadrature nodes: every
    term is non-negative, so there is none of the cancellation that
    ``beta @ D @ beta`` suffers when D has large entries.
    """
    beta = np.asarray(beta, dtype=np.float64).ravel()
    if beta.size != pen.dim:
        raise ValueError(f"coefficient length {beta.size} does not match penalty dimension {pen.dim}")
    if pen.root is None:
        return max(float(beta @ pen.matvec(beta)), 0.0)
    d = pen.root @ beta
    return float(np.dot(pen.root_weights, d * d))
