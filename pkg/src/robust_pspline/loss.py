"""rho-function families, their derivatives, and IRWLS weights.

All functions accept scalars or arrays and broadcast elementwise. The
quadratic family uses ``rho(r) = r**2 / 2`` so that ``psi(r) = r`` and the
IRWLS weight is identically one.
"""

from dataclasses import dataclass

import numpy as np

FAMILIES = ("quadratic", "huber", "smoothed_huber", "tukey")

HUBER_C = 1.345
TUKEY_C = 4.685

# half-width of the smoothed-Huber blend, as a fraction of c
SMOOTH_FRACTION = 0.1


@dataclass(frozen=True)
class LossSpec:
    family: str = "huber"
    c: float = HUBER_C

    def __post_init__(self):
        fam = self.family.replace("-", "_").lower()
        if fam not in FAMILIES:
            raise ValueError(f"unknown loss family {self.family!r}; choose from {FAMILIES}")
        object.__setattr__(self, "family", fam)
        if fam != "quadratic" and not (np.isfinite(self.c) and self.c > 0):
            raise ValueError(f"tuning constant must be positive, got {self.c}")
        object.__setattr__(self, "c", float(self.c))

    @property
    def convex(self):
        return self.family != "tukey"


def huber(c=HUBER_C):
    return LossSpec("huber", c)


def smoothed_huber(c=HUBER_C):
    return LossSpec("smoothed_huber", c)


def tukey(c=TUKEY_C):
    return LossSpec("tukey", c)


def quadratic():
    return LossSpec("quadratic", 1.0)


def _out(r, val):
    return float(val) if np.ndim(r) == 0 else val


def _blend(spec, a):
    # position inside the smoothing window, clipped to [0, 1]
    c = spec.c
    d = SMOOTH_FRACTION * c
    return np.clip((a - (c - d)) / (2.0 * d), 0.0, 1.0), c, d


def rho(spec, r):
    r = np.asarray(r, dtype=np.float64)
    a = np.abs(r)
    fam, c = spec.family, spec.c
    if fam == "quadratic":
        val = 0.5 * r * r
    elif fam == "huber":
        val = np.where(a <= c, 0.5 * r * r, c * a - 0.5 * c * c)
    elif fam == "smoothed_huber":
        u, c, d = _blend(spec, a)
        lo = c - d
        inside = 0.5 * lo * lo + 2.0 * d * (lo * u + 2.0 * d * (0.5 * u**2 - 0.25 * u**4 + 0.1 * u**5))
        # beyond the window rho is Huber's minus d^2/10 (same psi, shifted by the blend)
        val = np.where(a <= lo, 0.5 * r * r, np.where(a >= c + d, c * a - 0.5 * c * c - 0.1 * d * d, inside))
    else:
        z = np.minimum(a / c, 1.0)
        val = (c * c / 6.0) * (1.0 - (1.0 - z * z) ** 3)
    return _out(r, val)


def psi(spec, r):
    r = np.asarray(r, dtype=np.float64)
    a = np.abs(r)
    fam, c = spec.family, spec.c
    if fam == "quadratic":
        val = r.copy()
    elif fam == "huber":
        val = np.clip(r, -c, c)
    elif fam == "smoothed_huber":
        u, c, d = _blend(spec, a)
        lo = c - d
        mag = np.where(a <= lo, a, lo + 2.0 * d * (u - u**3 + 0.5 * u**4))
        val = np.sign(r) * mag
    else:
        z = r / c
        val = np.where(np.abs(z) < 1.0, r * (1.0 - z * z) ** 2, 0.0)
    return _out(r, val)


def psi_prime(spec, r):
    r = np.asarray(r, dtype=np.float64)
    a = np.abs(r)
    fam, c = spec.family, spec.c
    if fam == "quadratic":
        val = np.ones_like(r)
    elif fam == "huber":
        val = (a <= c).astype(np.float64)
    elif fam == "smoothed_huber":
        u, c, d = _blend(spec, a)
        val = 1.0 - u * u * (3.0 - 2.0 * u)
    else:
        z2 = (r / c) ** 2
        val = np.where(z2 < 1.0, (1.0 - z2) * (1.0 - 5.0 * z2), 0.0)
    return _out(r, val)


def weight(spec, r):
    """``psi(r) / r``, with the limit ``psi'(0) = 1`` at zero."""
    r = np.asarray(r, dtype=np.float64)
    a = np.abs(r)
    fam, c = spec.family, spec.c
    if fam == "quadratic":
        val = np.ones_like(r)
    elif fam == "huber":
        val = np.where(a <= c, 1.0, c / np.maximum(a, c))
    elif fam == "smoothed_huber":
        p = np.abs(psi(spec, a))
        val = np.where(a > 0, p / np.where(a > 0, a, 1.0), 1.0)
        val = np.minimum(val, 1.0)
    else:
        z2 = (r / c) ** 2
        val = np.where(z2 < 1.0, (1.0 - z2) ** 2, 0.0)
    return _out(r, val)
