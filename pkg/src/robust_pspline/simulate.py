"""Monte-Carlo comparison of Huber and least-squares penalized splines.

Data follow ``Y_i = f(t_i) + e_i`` with ``t_i = i/n``. Each replication
gets its own random stream, derived from ``(seed, function, law, rep)``,
so results do not depend on how replications are scheduled.
"""

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import RobustSplineError
from .fitter import FitConfig, fit
from .loss import HUBER_C, huber, quadratic

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _phi(z):
    return np.exp(-0.5 * z * z) / _SQRT_2PI


def f1(t):
    return np.sin(2.0 * np.pi * t) + np.exp(-3.0 * (t - 0.5) ** 2) + 0.4


def f2(t):
    return 1.0 / (0.1 + t) + 8.0 * np.exp(-400.0 * (t - 0.5) ** 2)


def f3(t):
    return _phi((t - 0.5) / 0.15) - _phi((t - 0.8) / 0.04)


FUNCTIONS = {"f1": f1, "f2": f2, "f3": f3}
ERROR_LAWS = ("gaussian", "t3", "mixture", "slash")
# noise-free law, for tests only; not part of the default grid
_EXTRA_LAWS = ("zero",)
ESTIMATORS = {
    "huber_pspline": FitConfig(loss=huber(HUBER_C), scale_method="iqr"),
    "ls_pspline": FitConfig(loss=quadratic(), scale_method="iqr"),
}


def test_function(name, t):
    """Evaluate one of ``f1``, ``f2``, ``f3`` on ``t`` in [0, 1]."""
    try:
        func = FUNCTIONS[name]
    except KeyError:
        raise ValueError(f"unknown test function {name!r}; choose from {sorted(FUNCTIONS)}") from None
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any((t_arr < 0) | (t_arr > 1)):
        raise ValueError("test functions are defined on [0, 1]")
    out = func(t_arr)
    return float(out) if t_arr.ndim == 0 else out


test_function.__test__ = False  # not a pytest test


def sample_errors(law, n, rng):
    """Draw ``n`` iid errors from ``law``.

    ``mixture`` is 0.85 N(0, 1) + 0.15 N(0, 81); ``slash`` is a standard
    normal over an independent Uniform(0, 1).
    """
    if law == "gaussian":
        return rng.standard_normal(n)
    if law == "t3":
        return rng.standard_t(3, size=n)
    if law == "mixture":
        sd = np.where(rng.random(n) < 0.15, 9.0, 1.0)
        return sd * rng.standard_normal(n)
    if law == "slash":
        z = rng.standard_normal(n)
        u = 1.0 - rng.random(n)  # (0, 1]
        return z / u
    if law == "zero":
        return np.zeros(n)
    raise ValueError(f"unknown error law {law!r}; choose from {ERROR_LAWS}")


@dataclass(frozen=True)
class SimConfig:
    n: int = 100
    reps: int = 200
    functions: tuple = ("f1", "f2", "f3")
    error_laws: tuple = ERROR_LAWS
    estimators: tuple = tuple(ESTIMATORS)
    seed: int = 0
    parallel_workers: int = 1

    def __post_init__(self):
        for name in ("functions", "error_laws", "estimators"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.n < 20:
            raise ValueError(f"n must be >= 20, got {self.n}")
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        if self.parallel_workers < 1:
            raise ValueError("parallel_workers must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        bad = [f for f in self.functions if f not in FUNCTIONS]
        bad += [e for e in self.error_laws if e not in ERROR_LAWS + _EXTRA_LAWS]
        bad += [e for e in self.estimators if e not in ESTIMATORS]
        if bad:
            raise ValueError(f"unknown names in config: {bad}")

    def public_dict(self):
        """Fields that determine the results (worker count excluded)."""
        d = asdict(self)
        d.pop("parallel_workers")
        for k in ("functions", "error_laws", "estimators"):
            d[k] = list(d[k])
        return d


@dataclass
class SimCell:
    function: str
    law: str
    estimator: str
    mses: list = field(default_factory=list)
    failures: int = 0

    @property
    def mean_mse(self):
        return float(np.mean(self.mses)) if self.mses else float("nan")

    @property
    def median_mse(self):
        return float(np.median(self.mses)) if self.mses else float("nan")

    def to_dict(self):
        return {
            "function": self.function,
            "law": self.law,
            "estimator": self.estimator,
            "mean_mse": self.mean_mse,
            "median_mse": self.median_mse,
            "failures": self.failures,
            "mses": list(self.mses),
        }


@dataclass
class SimReport:
    config: SimConfig
    cells: list

    def cell(self, function, law, estimator):
        for c in self.cells:
            if (c.function, c.law, c.estimator) == (function, law, estimator):
                return c
        raise KeyError((function, law, estimator))

    def to_dict(self):
        return {"config": self.config.public_dict(), "cells": [c.to_dict() for c in self.cells]}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, allow_nan=True)


def _stream(seed, function, law, rep):
    fi = sorted(FUNCTIONS).index(function)
    li = (ERROR_LAWS + _EXTRA_LAWS).index(law)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(fi, li, rep)))


def _replicate(task):
    seed, n, function, law, rep, estimators = task
    rng = _stream(seed, function, law, rep)
    t = np.arange(1, n + 1) / n
    truth = FUNCTIONS[function](t)
    y = truth + sample_errors(law, n, rng)
    out = {}
    for est in estimators:
        try:
            res = fit(t, y, ESTIMATORS[est])
        except (RobustSplineError, ArithmeticError):
            out[est] = None
            continue
        out[est] = float(np.mean((res.fitted - truth) ** 2))
    return out


def run_monte_carlo(config):
    """Run every (function, law, rep) and aggregate MSEs per estimator.

    Failed fits are counted per cell rather than raised.
    """
    keys = [(f, law) for f in config.functions for law in config.error_laws]
    tasks = [
        (config.seed, config.n, f, law, rep, config.estimators)
        for f, law in keys
        for rep in range(config.reps)
    ]
    if config.parallel_workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.parallel_workers) as pool:
            chunk = max(1, len(tasks) // (4 * config.parallel_workers))
            results = list(pool.map(_replicate, tasks, chunksize=chunk))
    else:
        results = [_replicate(task) for task in tasks]

    cells = []
    for k, (f, law) in enumerate(keys):
        block = results[k * config.reps : (k + 1) * config.reps]
        for est in config.estimators:
            vals = [r[est] for r in block]
            ok = [v for v in vals if v is not None]
            cells.append(SimCell(f, law, est, ok, len(vals) - len(ok)))
    return SimReport(config, cells)


def _fmt(v):
    return "nan" if not np.isfinite(v) else f"{v:.3g}"


def report_table(report, fmt="markdown"):
    """Format MSE means and medians; rows are (function, law) pairs."""
    estimators = list(report.config.estimators)
    header = ["function", "law"] + [f"{e}_{s}" for e in estimators for s in ("mean", "median")]
    rows = []
    seen = []
    for c in report.cells:
        if (c.function, c.law) not in seen:
            seen.append((c.function, c.law))
    for f, law in seen:
        row = [f, law]
        for e in estimators:
            try:
                c = report.cell(f, law, e)
            except KeyError:
                row += ["", ""]
                continue
            row += [_fmt(c.mean_mse), _fmt(c.median_mse)]
        rows.append(row)

    if fmt == "tsv":
        return "\n".join("\t".join(r) for r in [header] + rows) + "\n"
    if fmt == "markdown":
        lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        lines += ["| " + " | ".join(r) + " |" for r in rows]
        return "\n".join(lines) + "\n"
    if fmt == "json":
        return json.dumps([dict(zip(header, r)) for r in rows], indent=2) + "\n"
    raise ValueError(f"unknown table format {fmt!r}")
