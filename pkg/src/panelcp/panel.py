"""Panel container, partial sums and the CUSUM / ratio change-point statistics.

Time labels in the public API are 1-based (t = 1..T); arrays are stored
0-based, so column ``t - 1`` holds time ``t``.
"""

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .errors import DegenerateDataError, InvalidDataError, UnsupportedHorizonError


@dataclass(frozen=True)
class PanelDataset:
    """N panels observed at T common time points.

    Parameters
    ----------
    values : array_like, shape (N, T)
        Observation ``Y[i, t-1]`` of panel ``i`` at time ``t``. Copied and
        frozen on construction.
    """

    values: np.ndarray

    def __post_init__(self):
        try:
            arr = np.array(self.values, dtype=float, copy=True)
        except (TypeError, ValueError) as exc:
            raise InvalidDataError(f"panel values are not numeric: {exc}") from None
        if arr.ndim == 1:
            arr = arr[np.newaxis, :]
        if arr.ndim != 2:
            raise InvalidDataError(f"panel values must be an N x T matrix, got ndim={arr.ndim}")
        n, t = arr.shape
        if n < 1:
            raise InvalidDataError("need at least one panel")
        if t < 2:
            raise InvalidDataError(f"need at least two time points, got T={t}")
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise InvalidDataError(
                f"non-finite value at panel {bad[0] + 1}, time {bad[1] + 1}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n_panels(self):
        return self.values.shape[0]

    @property
    def horizon(self):
        return self.values.shape[1]

    def centered(self):
        """Values with each panel's first observation subtracted.

        Every statistic here is invariant to per-panel shifts; anchoring on
        the first observation keeps constant panels exactly zero.
        """
        return self.values - self.values[:, :1]


def as_panel(data):
    if isinstance(data, PanelDataset):
        return data
    return PanelDataset(data)


@dataclass(frozen=True)
class PartialMeans:
    """Forward and backward running means of every panel.

    ``forward[:, t-1]`` is the mean of the first t observations
    (t = 1..T); ``backward[:, t-1]`` is the mean of the last T - t
    observations (t = 1..T-1).
    """

    forward: np.ndarray
    backward: np.ndarray

    @classmethod
    def of(cls, data):
        y = as_panel(data).values
        T = y.shape[1]
        csum = np.cumsum(y, axis=1)
        forward = csum / np.arange(1, T + 1)
        tail = csum[:, -1:] - csum[:, :-1]
        backward = tail / np.arange(T - 1, 0, -1)
        return cls(forward, backward)


class Centering(str, Enum):
    """How each panel is centred before accumulating partial sums."""

    NONE = "none"
    PANEL_MEAN = "panel_mean"


def partial_sum_process(data, center=Centering.NONE):
    """Aggregated partial sums U(t) = N^{-1/2} sum_i sum_{s<=t} (Y_is - m_i).

    Parameters
    ----------
    data : PanelDataset or array_like
    center : Centering or str
        ``"none"`` uses m_i = 0, ``"panel_mean"`` the full-panel mean.

    Returns
    -------
    ndarray, shape (T,)
        ``U[t-1]`` for t = 1..T.
    """
    panel = as_panel(data)
    center = Centering(center)
    y = panel.values
    if center is Centering.PANEL_MEAN:
        y = y - y.mean(axis=1, keepdims=True)
    return np.cumsum(y, axis=1).sum(axis=0) / np.sqrt(panel.n_panels)


def _exact_partial_sums(y):
    """Exact aggregated partial sums A_t = sum_i sum_{s<=t} Y_is.

    Every double is an integer times a power of two, so after moving all
    entries to the smallest exponent E the sums are plain Python integers.
    Returns the list [A_1..A_T] and E (true value is A_t * 2**E).
    """
    mant, expo = np.frexp(y)
    mant = (mant * 2.0**53).astype(np.int64)
    expo = expo.astype(np.int64) - 53
    nz = mant != 0
    if not nz.any():
        return [0] * y.shape[1], 0
    base = int(expo[nz].min())
    shift = np.where(nz, expo - base, 0)
    cols = []
    for m_col, s_col in zip(mant.T.tolist(), shift.T.tolist()):
        cols.append(sum(m << k for m, k in zip(m_col, s_col)))
    acc, out = 0, []
    for c in cols:
        acc += c
        out.append(acc)
    return out, base


def _scaled(value, base):
    # one rounding, no intermediate overflow for extreme exponent spans
    scale = Fraction(2) ** base
    return float(Fraction(value) * scale)


def cusum_statistic(data):
    """Panel CUSUM statistic.

    N^{-1/2} max_{t=1..T-1} |sum_i sum_{s<=t} (Y_is - Ybar_iT)|, where
    Ybar_iT is the full mean of panel i. Evaluated exactly and rounded once.
    """
    panel = as_panel(data)
    A, base = _exact_partial_sums(panel.values)
    T = panel.horizon
    best = max(abs(T * A[t - 1] - t * A[T - 1]) for t in range(1, T))
    return _scaled(Fraction(best, T), base) / math.sqrt(panel.n_panels)


def ratio_statistic(data):
    """Panel ratio statistic.

    For each t = 2..T-2 the largest forward partial sum of deviations from
    the mean of the first t observations is divided by the largest
    backward partial sum of deviations from the mean of the last T - t
    observations; the statistic is the maximum of these ratios. A t whose
    denominator is exactly zero is skipped. The sums are formed in exact
    arithmetic, so the result is the correctly rounded value.

    Raises
    ------
    UnsupportedHorizonError
        If T < 4.
    DegenerateDataError
        If every denominator is zero.
    """
    panel = as_panel(data)
    T = panel.horizon
    if T < 4:
        raise UnsupportedHorizonError(f"ratio statistic requires T ≥ 4, got T={T}")
    A, _ = _exact_partial_sums(panel.values)
    B = [A[-1] - a for a in A]  # B[s-1] = sum over r > s
    best = None
    for t in range(2, T - 1):
        # t * (forward deviation sum) and (T - t) * (backward deviation sum)
        num = max(abs(t * A[s - 1] - s * A[t - 1]) for s in range(1, t + 1))
        den = max(abs((T - t) * B[s - 1] - (T - s) * B[t - 1]) for s in range(t, T))
        if den == 0:
            continue
        q = Fraction(num * (T - t), den * t)
        if best is None or q > best:
            best = q
    if best is None:
        raise DegenerateDataError(
            "ratio statistic undefined: every backward denominator is zero"
        )
    try:
        return float(best)
    except OverflowError:
        return math.inf
