"""Kernel backend selection.

The compiled extension is preferred; set ``ROBUST_PSPLINE_PURE_PYTHON=1``
to force the NumPy fallback (useful for debugging and benchmarks).
"""

import os

from . import _kernels_py

BACKEND = "python"
kernels = _kernels_py

if os.environ.get("ROBUST_PSPLINE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        pass
    else:
        kernels = _ckernels
        BACKEND = "cython"


def available_backends():
    """Return a dict of importable kernel modules keyed by name."""
    out = {"python": _kernels_py}
    try:
        from . import _ckernels
    except ImportError:
        return out
    out["cython"] = _ckernels
    return out
