"""Compare the compiled kernels with the NumPy fallback.

Run ``python benchmarks/bench_kernels.py`` after an editable install. Each
kernel is timed on the same inputs under both backends; an end-to-end
``fit`` is timed in a subprocess per backend because the backend is fixed
at import.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from robust_pspline._backend import available_backends
from robust_pspline.basis import design_matrix, make_knots
from robust_pspline.penalty import penalty_matrix

FIT_SNIPPET = """
import time, numpy as np
from robust_pspline import fit, FitConfig, loss, BACKEND
from robust_pspline.simulate import f1
rng = np.random.default_rng(0)
t = np.arange(1, {n} + 1) / {n}
y = f1(t) + rng.standard_t(3, {n})
cfg = FitConfig(loss=loss.huber())
fit(t, y, cfg)
best = float("inf")
for _ in range({repeat}):
    start = time.perf_counter()
    fit(t, y, cfg)
    best = min(best, time.perf_counter() - start)
print(BACKEND, best)
"""


def _inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    xs = np.sort(rng.uniform(0, 1, n))
    kv = make_knots(xs)
    B = design_matrix(kv, xs)
    D = penalty_matrix(kv, 2)
    w = rng.uniform(0.1, 1, n)
    return kv, xs, B, D, w


def _cases(mod, kv, xs, B, D, w):
    gram = mod.band_gram(B.values, B.first, w, kv.dim)
    gram[: D.band.shape[0]] += 1e-3 * D.band
    L, _ = mod.band_cholesky(gram)
    rhs = mod.band_rhs(B.values, B.first, w, xs, kv.dim)
    order = np.argsort(np.concatenate((B.first, D.root.first)), kind="stable")
    vals = np.vstack((B.values, D.root.values))[order]
    first = np.concatenate((B.first, D.root.first))[order]
    sw = np.concatenate((np.sqrt(w), np.sqrt(1e-3 * D.root_weights)))[order]
    return {
        "bspline_rows": lambda: mod.bspline_rows(kv.augmented, kv.order, xs, 0),
        "band_gram": lambda: mod.band_gram(B.values, B.first, w, kv.dim),
        "band_qr_rows": lambda: mod.band_qr_rows(vals, first, sw, kv.dim),
        "band_cholesky": lambda: mod.band_cholesky(gram),
        "band_cho_solve": lambda: mod.band_cho_solve(L, rhs),
        "band_selinv": lambda: mod.band_selinv(L),
    }


def bench_kernels(n, number):
    backends = available_backends()
    data = _inputs(n)
    table = {}
    for name, mod in sorted(backends.items()):
        for kernel, func in _cases(mod, *data).items():
            t = min(timeit.repeat(func, number=number, repeat=5)) / number
            table.setdefault(kernel, {})[name] = t
    return table


def bench_fit(n, repeat):
    out = {}
    for pure in (False, True):
        env = dict(os.environ)
        if pure:
            env["ROBUST_PSPLINE_PURE_PYTHON"] = "1"
        proc = subprocess.run(
            [sys.executable, "-c", FIT_SNIPPET.format(n=n, repeat=repeat)],
            env=env, capture_output=True, text=True, check=True,
        )
        backend, secs = proc.stdout.split()
        out[backend] = float(secs)
    return out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=1600, help="sample size")
    parser.add_argument("--number", type=int, default=20, help="calls per timing")
    parser.add_argument("--fit-repeat", type=int, default=3)
    args = parser.parse_args(argv)

    table = bench_kernels(args.n, args.number)
    names = sorted({b for row in table.values() for b in row})
    print(f"kernel timings, n = {args.n} (microseconds per call)")
    print(f"{'kernel':<16}" + "".join(f"{b:>12}" for b in names) + f"{'speedup':>10}")
    for kernel, row in table.items():
        cells = "".join(f"{row[b] * 1e6:>12.1f}" for b in names)
        speed = row["python"] / row["cython"] if "cython" in row else float("nan")
        print(f"{kernel:<16}{cells}{speed:>9.1f}x")

    if "cython" not in available_backends():
        print("compiled backend not built; fit comparison skipped")
        return 0
    fits = bench_fit(args.n, args.fit_repeat)
    print(f"\nhuber fit with GCV search, n = {args.n} (seconds, best of {args.fit_repeat})")
    for b, secs in sorted(fits.items()):
        print(f"{b:<16}{secs:>12.3f}")
    print(f"{'speedup':<16}{fits['python'] / fits['cython']:>11.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
