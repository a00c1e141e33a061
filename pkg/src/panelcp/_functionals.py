"""Vectorised max-functionals of partial-sum paths.

Both the finite-sample statistics and their Gaussian limits are the same
functionals applied to a path ``x[0..T-1]`` holding ``x_t`` for t = 1..T,
so the arithmetic lives here once.
"""

import numpy as np

from .errors import DegenerateDataError, UnsupportedHorizonError

# denominators at or below this fraction of the path scale count as zero
ZERO_TOL = 64 * np.finfo(float).eps


def bridge_max(x):
    """max_{t=1..T-1} |x_t - (t/T) x_T| along the last axis."""
    x = np.asarray(x, dtype=float)
    T = x.shape[-1]
    if T < 2:
        raise UnsupportedHorizonError(f"the CUSUM functional requires T ≥ 2, got T={T}")
    frac = np.arange(1, T) / T
    return np.abs(x[..., :-1] - frac * x[..., -1:]).max(axis=-1)


def ratio_terms(x):
    """Per-t numerators and denominators of the ratio functional.

    Returns two arrays of shape ``x.shape[:-1] + (T-3,)`` whose last axis
    runs over t = 2..T-2.
    """
    x = np.asarray(x, dtype=float)
    T = x.shape[-1]
    if T < 4:
        raise UnsupportedHorizonError(f"the ratio statistic requires T ≥ 4, got T={T}")
    z = x[..., -1:] - x  # z_s = x_T - x_s
    nums, dens = [], []
    for t in range(2, T - 1):
        s = np.arange(1, t + 1)
        nums.append(np.abs(x[..., :t] - (s / t) * x[..., t - 1:t]).max(axis=-1))
        s = np.arange(t, T)
        w = (T - s) / (T - t)
        dens.append(np.abs(z[..., t - 1:T - 1] - w * z[..., t - 1:t]).max(axis=-1))
    return np.stack(nums, axis=-1), np.stack(dens, axis=-1)


def ratio_max(x):
    """Outer max over t = 2..T-2 of the forward/backward bridge ratio.

    Values of t with a zero denominator are skipped. Raises
    DegenerateDataError if that leaves nothing for some path.
    """
    x = np.asarray(x, dtype=float)
    num, den = ratio_terms(x)
    scale = np.abs(x).max(axis=-1, keepdims=True)
    ok = den > ZERO_TOL * scale
    if not np.all(ok.any(axis=-1)):
        raise DegenerateDataError(
            "ratio statistic undefined: every backward denominator is zero"
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(ok, num / np.where(ok, den, 1.0), -np.inf)
    return q.max(axis=-1)
