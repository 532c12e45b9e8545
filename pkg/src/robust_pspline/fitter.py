"""M-type penalized spline estimator.

The estimator minimizes

    J(beta) = mean(rho((y - B beta) / sigma)) + lam * beta^T D beta

with ``sigma`` a preliminary scale held fixed throughout. It is computed
by iteratively reweighted least squares, each step solving

    (B^T W B + 2 n lam sigma^2 D) beta_new = B^T W y,   W = psi(r/s)/(r/s),

and ``lam`` is chosen by minimizing a weighted GCV criterion with
Nelder-Mead in ``log10(lam)``.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import loss as _loss
from ._backend import kernels
from .basis import KnotVector, design_matrix, make_knots
from .exceptions import (
    DegenerateGCVError,
    FactorizationError,
    FitError,
    InsufficientDataError,
    RobustSplineError,
    SelectionError,
    SingularFitError,
)
from .linalg import band_solve, penalized_factor, smoother_trace
from .loss import LossSpec
from .penalty import penalty_matrix, roughness
from .scale import SCALE_METHODS, diff_median_scale, estimate_scale

log = logging.getLogger(__name__)

LOG10_LAMBDA_BOUNDS = (-10.0, 10.0)
# weights below this everywhere mean the reweighted system is empty
WEIGHT_FLOOR = 1e-12
# relative slack for roundoff when checking monotone descent
DESCENT_RTOL = 1e-12


@dataclass(frozen=True)
class FitConfig:
    """Settings for :func:`fit`.

    ``scale_method`` is one of ``"iqr"``, ``"mad"``, ``"diff_median"``,
    ``"gasser"`` or a positive float giving sigma directly. ``lam`` is
    ``"auto"`` for GCV selection or a non-negative float.
    """

    loss: LossSpec = field(default_factory=LossSpec)
    p: int = 4
    q: int = 2
    k_max: int = 40
    scale_method: object = "iqr"
    lam: object = "auto"
    irwls_tol: float = 1e-8
    irwls_max_iter: int = 100
    nm_start: float = 0.0
    nm_max_iter: int = 200

    def __post_init__(self):
        if not (1 <= self.q < self.p):
            raise ValueError(f"need 1 <= q < p, got q={self.q}, p={self.p}")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if not (self.irwls_tol > 0 and self.irwls_max_iter >= 1 and self.nm_max_iter >= 1):
            raise ValueError("tolerances and iteration caps must be positive")
        if isinstance(self.scale_method, str):
            if self.scale_method not in SCALE_METHODS:
                raise ValueError(f"unknown scale method {self.scale_method!r}")
        elif not float(self.scale_method) > 0:
            raise ValueError("a fixed scale must be positive")
        if isinstance(self.lam, str):
            if self.lam != "auto":
                raise ValueError(f"lam must be 'auto' or a number, got {self.lam!r}")
        elif not float(self.lam) >= 0:
            raise ValueError("a fixed lambda must be non-negative")


@dataclass
class IRWLSResult:
    beta: np.ndarray
    weights: np.ndarray
    iterations: int
    converged: bool
    objective: list


@dataclass
class GCVInfo:
    gcv: float
    beta: np.ndarray
    weights: np.ndarray
    edf: float
    rss_weighted: float
    irwls: IRWLSResult


@dataclass
class FitResult:
    knots: KnotVector
    beta: np.ndarray
    sigma_hat: float
    lambda_hat: float
    weights: np.ndarray
    fitted: np.ndarray
    edf: float
    gcv: float
    iterations: int
    converged: bool
    loss: LossSpec
    q: int
    x: np.ndarray
    y: np.ndarray
    gcv_trace: list = field(default_factory=list)

    @property
    def residuals(self):
        return self.y - self.fitted

    def to_dict(self):
        return {
            "knots": {
                "interior": self.knots.interior.tolist(),
                "lo": self.knots.lo,
                "hi": self.knots.hi,
                "order": self.knots.order,
            },
            "beta": self.beta.tolist(),
            "sigma_hat": self.sigma_hat,
            "lambda_hat": self.lambda_hat,
            "weights": self.weights.tolist(),
            "fitted": self.fitted.tolist(),
            "edf": self.edf,
            "gcv": self.gcv,
            "iterations": self.iterations,
            "converged": self.converged,
            "loss": {"family": self.loss.family, "c": self.loss.c},
            "q": self.q,
            "x": self.x.tolist(),
            "y": self.y.tolist(),
            "gcv_trace": [[float(a), float(b)] for a, b in self.gcv_trace],
        }

    @classmethod
    def from_dict(cls, d):
        k = d["knots"]
        return cls(
            knots=KnotVector(np.array(k["interior"], dtype=float), k["lo"], k["hi"], k["order"]),
            beta=np.array(d["beta"], dtype=float),
            sigma_hat=float(d["sigma_hat"]),
            lambda_hat=float(d["lambda_hat"]),
            weights=np.array(d["weights"], dtype=float),
            fitted=np.array(d["fitted"], dtype=float),
            edf=float(d["edf"]),
            gcv=float(d["gcv"]),
            iterations=int(d["iterations"]),
            converged=bool(d["converged"]),
            loss=LossSpec(d["loss"]["family"], d["loss"]["c"]),
            q=int(d["q"]),
            x=np.array(d["x"], dtype=float),
            y=np.array(d["y"], dtype=float),
            gcv_trace=[tuple(v) for v in d.get("gcv_trace", [])],
        )


def _penalty_scale(n, lam, sigma):
    return 2.0 * n * lam * sigma * sigma


def penalized_objective(B, D, ys, loss, sigma, lam, beta):
    """``mean(rho((y - B beta)/sigma)) + lam * beta^T D beta``."""
    beta = np.asarray(beta, dtype=np.float64)
    r = np.asarray(ys, dtype=np.float64) - B @ beta
    return float(np.mean(_loss.rho(loss, r / sigma)) + lam * roughness(D, beta))


def estimating_equation(B, D, ys, loss, sigma, lam, beta):
    """Gradient of :func:`penalized_objective` with respect to ``beta``.

    ``-(n sigma)^{-1} B^T psi(r/sigma) + 2 lam D beta``; zero at the estimate.
    """
    beta = np.asarray(beta, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    n = ys.size
    r = ys - B @ beta
    ps = np.asarray(_loss.psi(loss, r / sigma), dtype=np.float64)
    score = kernels.band_rhs(B.values, B.first, np.ones(n), ps, B.ncols)
    return -score / (n * sigma) + 2.0 * lam * D.matvec(beta)


def _factor(B, D, w, lam, sigma):
    try:
        return penalized_factor(B, w, D, _penalty_scale(B.n, lam, sigma))
    except FactorizationError as exc:
        raise SingularFitError(
            f"penalized normal equations singular at lambda={lam:g} (pivot {exc.pivot})"
        ) from exc


def _weighted_solve(B, D, ys, w, lam, sigma):
    factor = _factor(B, D, w, lam, sigma)
    rhs = kernels.band_rhs(B.values, B.first, w, ys, B.ncols)
    return band_solve(factor, rhs), factor


def _weights(loss, r, sigma):
    if loss.family == "quadratic":
        return np.ones_like(r)
    return np.asarray(_loss.weight(loss, r / sigma), dtype=np.float64)


def irwls(B, D, ys, loss, sigma, lam, beta0=None, tol=1e-8, max_iter=100, check_descent=False):
    """Iteratively reweighted penalized least squares at fixed ``lam``.

    Starts from ``beta0`` (default: the penalized least-squares solution).
    Convergence is ``max|dbeta| / (1 + max|beta|) <= tol``. Non-convergence
    is reported through ``converged=False``, not raised.

    With ``check_descent`` the penalized objective is verified to be
    non-increasing at every step (up to roundoff); a violation raises
    ``AssertionError``.

    Raises
    ------
    SingularFitError
        A reweighted system could not be factorized.
    """
    ys = np.asarray(ys, dtype=np.float64)
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not lam >= 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    if ys.size != B.n or D.dim != B.ncols:
        raise ValueError("dimensions of design, penalty, and response do not conform")

    ones = np.ones(B.n)
    if beta0 is None:
        beta, _ = _weighted_solve(B, D, ys, ones, lam, sigma)
        if loss.family == "quadratic":
            obj = penalized_objective(B, D, ys, loss, sigma, lam, beta)
            return IRWLSResult(beta, ones, 1, True, [obj])
    else:
        beta = np.array(beta0, dtype=np.float64)

    objective = [penalized_objective(B, D, ys, loss, sigma, lam, beta)]
    converged = False
    it = 0
    while it < max_iter:
        w = _weights(loss, ys - B @ beta, sigma)
        if w.max() < WEIGHT_FLOOR:
            log.warning("all IRWLS weights underflowed; aborting")
            break
        new, _ = _weighted_solve(B, D, ys, w, lam, sigma)
        it += 1
        obj = penalized_objective(B, D, ys, loss, sigma, lam, new)
        if check_descent and obj > objective[-1] + DESCENT_RTOL * (abs(objective[-1]) + 1e-300):
            raise AssertionError(
                f"IRWLS objective increased at iteration {it}: {objective[-1]!r} -> {obj!r}"
            )
        objective.append(obj)
        step = np.max(np.abs(new - beta)) / (1.0 + np.max(np.abs(beta)))
        beta = new
        if loss.family == "quadratic" or step <= tol:
            converged = True
            break

    w = _weights(loss, ys - B @ beta, sigma)
    return IRWLSResult(beta, w, it, converged, objective)


def _start(B, D, ys, loss, sigma, lam, beta_warm, tol, max_iter):
    """Starting point: warm start for convex losses; a Huber fit for Tukey."""
    if loss.convex:
        return beta_warm
    res = irwls(B, D, ys, _loss.huber(), sigma, lam, beta0=beta_warm, tol=tol, max_iter=max_iter)
    return res.beta


def gcv_score(B, D, ys, loss, sigma, lam, beta_warm=None, tol=1e-8, max_iter=100):
    """Weighted GCV at ``lam``.

    ``n^{-1} sum W_i r_i^2 / (1 - n^{-1} tr H)^2`` with ``W`` and the smoother
    ``H = B (B^T W B + 2 n lam sigma^2 D)^{-1} B^T W`` frozen at the
    converged IRWLS solution.

    Raises
    ------
    DegenerateGCVError
        If ``tr H >= n``.
    """
    ys = np.asarray(ys, dtype=np.float64)
    n = ys.size
    beta0 = _start(B, D, ys, loss, sigma, lam, beta_warm, tol, max_iter)
    res = irwls(B, D, ys, loss, sigma, lam, beta0=beta0, tol=tol, max_iter=max_iter)
    w = res.weights
    factor = _factor(B, D, w, lam, sigma)
    edf = smoother_trace(B, w, factor)
    denom = 1.0 - edf / n
    if not denom > 0:
        raise DegenerateGCVError(f"smoother trace {edf:.6g} >= n = {n} at lambda={lam:g}")
    r = ys - B @ res.beta
    rss = float(np.mean(w * r * r))
    return rss / (denom * denom), GCVInfo(rss / denom**2, res.beta, w, edf, rss, res)


def lambda_reference(B, D, sigma):
    """Penalty size at which ``2 n lam sigma^2 tr(D)`` equals ``tr(B^T B)``.

    Searching ``log10(lam / lambda_reference)`` makes the selector invariant
    to the units of x and y.
    """
    n = B.n
    g = float(np.sum(B.values**2))
    d = float(np.sum(D.band[0]))
    return g / (2.0 * n * sigma * sigma * d)


def select_lambda(B, D, ys, loss, sigma, config=None, trace=None):
    """Minimize GCV over ``lam`` with Nelder-Mead in ``log10`` units.

    The search variable is ``u = log10(lam / lambda_reference)``, confined
    to [-10, 10] and started at ``config.nm_start``. IRWLS is warm-started
    from the previous evaluation. If ``trace`` is a list, ``(lam, gcv)``
    pairs are appended to it.

    Raises
    ------
    SelectionError
        If every GCV evaluation failed.
    """
    config = config or FitConfig(loss=loss)
    ys = np.asarray(ys, dtype=np.float64)
    ref = lambda_reference(B, D, sigma)
    lo, hi = LOG10_LAMBDA_BOUNDS
    state = {"beta": None, "scale": None}
    evals = []

    def objective(u):
        u = float(np.clip(u[0], lo, hi))
        lam = ref * 10.0**u
        try:
            g, info = gcv_score(
                B, D, ys, loss, sigma, lam, beta_warm=state["beta"],
                tol=config.irwls_tol, max_iter=config.irwls_max_iter,
            )
        except (DegenerateGCVError, SingularFitError) as exc:
            log.debug("GCV failed at lambda=%g: %s", lam, exc)
            return np.inf
        if loss.convex:
            state["beta"] = info.beta
        evals.append((u, g))
        if trace is not None:
            trace.append((lam, g))
        if state["scale"] is None:
            state["scale"] = g if g > 0 else 1.0
        return g / state["scale"]

    u0 = float(np.clip(config.nm_start, lo, hi))
    u1 = u0 + 1.0 if u0 + 1.0 <= hi else u0 - 1.0
    minimize(
        objective,
        x0=[u0],
        method="Nelder-Mead",
        bounds=[LOG10_LAMBDA_BOUNDS],
        options={
            "initial_simplex": [[u0], [u1]],
            "xatol": 1e-3,
            "fatol": 1e-8,
            "maxiter": config.nm_max_iter,
        },
    )
    if not evals:
        raise SelectionError("every GCV evaluation failed; try a fixed lambda")
    u_best = min(evals, key=lambda e: e[1])[0]
    return ref * 10.0**u_best


def _estimate_sigma(xs, ys, config):
    if not isinstance(config.scale_method, str):
        return float(config.scale_method)
    chain = [config.scale_method]
    if config.scale_method != "diff_median":
        chain.append("diff_median")
    for method in chain:
        try:
            s = estimate_scale(xs, ys, method, allow_ties=True)
        except InsufficientDataError as exc:
            log.warning("scale method %s unavailable (%s)", method, exc)
            continue
        if s > 0 and np.isfinite(s):
            if method != config.scale_method:
                log.warning("scale method %s gave no usable scale; used %s", config.scale_method, method)
            return s
    # exactly-fit data: any positive scale gives the same zero-residual fixed point
    spread = float(np.std(ys))
    s = spread if spread > 0 else 1.0
    log.warning("all scale estimates are zero; using %g", s)
    return s


def fit(xs, ys, config=None):
    """Fit an M-type penalized spline.

    Pipeline: sort by x, place knots, build design and penalty, estimate
    the preliminary scale, choose ``lam`` (GCV or fixed), run the final
    IRWLS. Output arrays follow the input order of ``xs``.

    Raises
    ------
    FitError
        Wrapping the failing stage's exception; ``err.stage`` names it.
    """
    config = config or FitConfig()
    xs = np.asarray(xs, dtype=np.float64).ravel()
    ys = np.asarray(ys, dtype=np.float64).ravel()
    if xs.size != ys.size:
        raise FitError("input", ValueError(f"xs and ys differ in length ({xs.size} vs {ys.size})"))
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise FitError("input", ValueError("xs and ys must be finite"))
    if xs.size < config.p + 1:
        raise FitError("input", InsufficientDataError(f"need n >= p + 1 = {config.p + 1}, got {xs.size}"))

    order = np.argsort(xs, kind="stable")
    xs_s, ys_s = xs[order], ys[order]
    loss = config.loss

    try:
        knots = make_knots(xs_s, config.p, config.k_max)
        B = design_matrix(knots, xs_s)
        D = penalty_matrix(knots, config.q)
    except RobustSplineError as exc:
        raise FitError("basis", exc) from exc

    try:
        sigma = _estimate_sigma(xs_s, ys_s, config)
    except RobustSplineError as exc:
        raise FitError("scale", exc) from exc

    trace = []
    if config.lam == "auto":
        try:
            lam = select_lambda(B, D, ys_s, loss, sigma, config, trace=trace)
        except RobustSplineError as exc:
            raise FitError("select_lambda", exc) from exc
    else:
        lam = float(config.lam)

    try:
        beta0 = _start(B, D, ys_s, loss, sigma, lam, None, config.irwls_tol, config.irwls_max_iter)
        res = irwls(
            B, D, ys_s, loss, sigma, lam, beta0=beta0,
            tol=config.irwls_tol, max_iter=config.irwls_max_iter,
        )
        w = res.weights
        factor = _factor(B, D, w, lam, sigma)
        edf = smoother_trace(B, w, factor)
    except RobustSplineError as exc:
        raise FitError("irwls", exc) from exc

    fitted_s = B @ res.beta
    denom = 1.0 - edf / xs.size
    r = ys_s - fitted_s
    gcv = float(np.mean(w * r * r) / denom**2) if denom > 0 else float("inf")

    inv = np.empty_like(order)
    inv[order] = np.arange(order.size)
    return FitResult(
        knots=knots,
        beta=res.beta,
        sigma_hat=float(sigma),
        lambda_hat=float(lam),
        weights=w[inv],
        fitted=fitted_s[inv],
        edf=float(edf),
        gcv=gcv,
        iterations=res.iterations,
        converged=res.converged,
        loss=loss,
        q=config.q,
        x=xs.copy(),
        y=ys.copy(),
        gcv_trace=trace,
    )


def predict(result, xs_new):
    """Evaluate a fitted spline at new points inside the training range.

    Raises
    ------
    DomainError
        For any point outside ``[a, b]``; there is no extrapolation.
    """
    xs_new = np.asarray(xs_new, dtype=np.float64)
    scalar = xs_new.ndim == 0
    vals = design_matrix(result.knots, xs_new.ravel()) @ result.beta
    return float(vals[0]) if scalar else vals.reshape(xs_new.shape)
