"""Pure-Python/NumPy versions of the numerical kernels.

These mirror ``_ckernels.pyx`` call for call and are used whenever the
compiled extension is unavailable (or ``ROBUST_PSPLINE_PURE_PYTHON=1``).

Band storage convention (LAPACK lower): ``ab[d, j] = A[j + d, j]`` for
``0 <= d <= bw``. Entries past the matrix edge are zero.
"""

import numpy as np
import scipy.linalg


def bspline_rows(t, p, x, deriv):
    """Non-zero B-spline values (or derivatives) at each point of ``x``.

    Parameters
    ----------
    t : ndarray, shape (K + 2p,)
        Augmented knot sequence, boundary knots repeated ``p`` times.
    p : int
        Spline order.
    x : ndarray, shape (n,)
        Evaluation points, assumed inside ``[t[0], t[-1]]``.
    deriv : int
        Derivative order, ``0 <= deriv < p``.

    Returns
    -------
    vals : ndarray, shape (n, p)
        ``vals[i, r]`` is the value of basis function ``first[i] + r``.
    first : ndarray, shape (n,)
        Index of the first non-zero basis function for each row.
    """
    t = np.asarray(t, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    m = t.size - p
    left = np.searchsorted(t, x, side="right") - 1
    np.clip(left, p - 1, m - 1, out=left)

    order = p - deriv
    vals = np.ones((x.size, 1))
    for j in range(1, order):
        new = np.zeros((x.size, j + 1))
        saved = np.zeros(x.size)
        for r in range(j):
            tr = t[left + r + 1]
            tl = t[left + r + 1 - j]
            term = vals[:, r] / (tr - tl)
            new[:, r] = saved + (tr - x) * term
            saved = (x - tl) * term
        new[:, j] = saved
        vals = new

    for k in range(order + 1, p + 1):
        new = np.zeros((x.size, k))
        for r in range(k):
            i = left - k + 1 + r
            acc = np.zeros(x.size)
            if r >= 1:
                acc += vals[:, r - 1] / (t[i + k - 1] - t[i])
            if r <= k - 2:
                acc -= vals[:, r] / (t[i + k] - t[i + 1])
            new[:, r] = (k - 1) * acc
        vals = new

    return vals, (left - p + 1).astype(np.intp)


def band_gram(vals, first, w, m):
    """Lower band of ``B^T diag(w) B`` for a row-banded design."""
    n, p = vals.shape
    ab = np.zeros((p, m))
    wv = vals * w[:, None]
    for d in range(p):
        # contribution to A[c + d, c] from row i: w_i * B[i, c + d] * B[i, c]
        prod = wv[:, : p - d] * vals[:, d:]
        cols = first[:, None] + np.arange(p - d)[None, :]
        np.add.at(ab[d], cols.ravel(), prod.ravel())
    return ab


def band_rhs(vals, first, w, y, m):
    """``B^T (w * y)`` for a row-banded design."""
    n, p = vals.shape
    out = np.zeros(m)
    cols = first[:, None] + np.arange(p)[None, :]
    np.add.at(out, cols.ravel(), (vals * (w * y)[:, None]).ravel())
    return out


def band_matvec_rows(vals, first, beta):
    """``B @ beta`` for a row-banded design."""
    p = vals.shape[1]
    cols = first[:, None] + np.arange(p)[None, :]
    return np.einsum("ij,ij->i", vals, beta[cols])


def band_qr_rows(vals, first, sw, m):
    """Triangular factor of the stacked rows ``sw_i * B[i]`` by orthogonal reduction.

    Returns ``R^T`` in lower band storage, so ``R^T R = B^T diag(sw^2) B``
    without ever forming the product. Rows must be ordered by ``first``
    (the compiled sweep relies on it). Dense LAPACK QR stands in for the
    compiled row-by-row Givens sweep.
    """
    n, p = vals.shape
    A = np.zeros((n, m))
    cols = first[:, None] + np.arange(p)[None, :]
    np.put_along_axis(A, cols, vals * sw[:, None], axis=1)
    # Householder needs heavy rows first when row scales differ wildly
    A = A[np.argsort(-np.abs(A).max(axis=1), kind="stable")]
    R = scipy.linalg.qr(A, mode="r", check_finite=False)[0][:m]
    if R.shape[0] < m:
        R = np.vstack((R, np.zeros((m - R.shape[0], m))))
    sign = np.where(np.diag(R) < 0, -1.0, 1.0)
    R = R * sign[:, None]
    out = np.zeros((p, m))
    for d in range(p):
        idx = np.arange(m - d)
        out[d, : m - d] = R[idx, idx + d]
    return out


def band_cholesky(ab):
    """Banded Cholesky ``A = L L^T``.

    Returns ``(L, info)`` where ``info`` is -1 on success, otherwise the
    index of the first non-positive pivot (``L`` is then meaningless).
    """
    bw1, m = ab.shape
    bw = bw1 - 1
    L = np.array(ab, dtype=np.float64, copy=True)
    for j in range(m):
        kmin = max(0, j - bw)
        s = L[0, j]
        for k in range(kmin, j):
            v = L[j - k, k]
            s -= v * v
        if not s > 0.0:
            return L, j
        ljj = np.sqrt(s)
        L[0, j] = ljj
        for i in range(j + 1, min(j + bw + 1, m)):
            s = L[i - j, j]
            for k in range(max(0, i - bw), j):
                s -= L[i - k, k] * L[j - k, k]
            L[i - j, j] = s / ljj
    return L, -1


def band_cho_solve(L, rhs):
    """Solve ``L L^T x = rhs`` given the lower band factor."""
    bw1, m = L.shape
    bw = bw1 - 1
    z = np.array(rhs, dtype=np.float64, copy=True)
    for j in range(m):
        s = z[j]
        for k in range(max(0, j - bw), j):
            s -= L[j - k, k] * z[k]
        z[j] = s / L[0, j]
    for j in range(m - 1, -1, -1):
        s = z[j]
        for i in range(j + 1, min(j + bw + 1, m)):
            s -= L[i - j, j] * z[i]
        z[j] = s / L[0, j]
    return z


def band_selinv(L):
    """Band of ``(L L^T)^{-1}`` in the same lower storage as ``L``.

    Takahashi-style backward recursion; only entries inside the band are
    formed, which is all a trace against a banded matrix needs.
    """
    bw1, m = L.shape
    bw = bw1 - 1
    S = np.zeros_like(L)
    for j in range(m - 1, -1, -1):
        ljj = L[0, j]
        kmax = min(j + bw, m - 1)
        for i in range(kmax, j, -1):
            s = 0.0
            for k in range(j + 1, kmax + 1):
                # S[i, k] with both i, k in (j, j + bw]
                if i >= k:
                    s += L[k - j, j] * S[i - k, k]
                else:
                    s += L[k - j, j] * S[k - i, i]
            S[i - j, j] = -s / ljj
        s = 0.0
        for k in range(j + 1, kmax + 1):
            s += L[k - j, j] * S[k - j, j]
        S[0, j] = (1.0 / ljj - s) / ljj
    return S
