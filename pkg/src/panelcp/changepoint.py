"""Common change-point estimation and segment-wise residuals."""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .panel import as_panel

# relative width of the band treated as a tie at the minimum
TIE_RTOL = 1e-12


def square_weights(t):
    """Default weight sequence w(t) = t**2."""
    return np.asarray(t, dtype=float) ** 2


WEIGHTS = {"t2": square_weights}


def resolve_weights(weights):
    if weights is None:
        return square_weights
    if callable(weights):
        return weights
    try:
        return WEIGHTS[weights]
    except KeyError:
        raise ParameterError(
            f"unknown weight sequence {weights!r}; choose from {sorted(WEIGHTS)}"
        ) from None


@dataclass(frozen=True)
class ChangePointEstimate:
    """Result of the weighted least-squares change-point search.

    ``objective[k]`` and ``weights[k]`` belong to t = k + 2, i.e. the
    arrays cover t = 2..T.
    """

    tau_hat: int
    objective: np.ndarray
    weights: np.ndarray

    @property
    def no_change(self):
        return self.tau_hat == len(self.objective) + 1


def changepoint_objective(data, weights=None):
    """Criterion values (1/w(t)) sum_i sum_{s<=t} (Y_is - Ybar_it)^2 for t = 2..T."""
    panel = as_panel(data)
    w_fn = resolve_weights(weights)
    y = panel.centered()
    T = panel.horizon
    ts = np.arange(2, T + 1)
    w = np.asarray(w_fn(ts), dtype=float)
    if w.shape != ts.shape or not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ParameterError("weights must be finite and positive for t = 2..T")
    ss = np.empty(len(ts))
    for k, t in enumerate(ts):
        seg = y[:, :t]
        dev = seg - seg.mean(axis=1, keepdims=True)
        ss[k] = np.sum(dev * dev)
    return ss / w, w


def estimate_changepoint(data, weights=None):
    """Estimate the common change point.

    Minimises the weighted within-segment sum of squares over t = 2..T.
    Ties (up to a relative band of ``TIE_RTOL``) go to the largest t, so a
    flat criterion reports tau_hat = T, i.e. no change.

    Parameters
    ----------
    data : PanelDataset or array_like
    weights : callable or str, optional
        Vectorised w(t) or a registered name; defaults to t**2.
    """
    obj, w = changepoint_objective(data, weights)
    lo = obj.min()
    band = TIE_RTOL * max(obj.max(), 0.0)
    k = np.flatnonzero(obj <= lo + band)[-1]
    obj.setflags(write=False)
    w.setflags(write=False)
    return ChangePointEstimate(int(k + 2), obj, w)


@dataclass(frozen=True)
class ResidualMatrix:
    """Residuals centred on the segment means either side of ``tau_used``."""

    residuals: np.ndarray
    tau_used: int


def compute_residuals(data, tau):
    """Residuals around the means before and after ``tau``.

    e_it = Y_it - mean(Y_i1..Y_i,tau) for t <= tau and
    Y_it - mean(Y_i,tau+1..Y_iT) otherwise; with tau = T only the first
    branch applies.
    """
    panel = as_panel(data)
    T = panel.horizon
    if isinstance(tau, bool) or int(tau) != tau or not 2 <= tau <= T:
        raise ParameterError(f"tau must be an integer in 2..{T}, got {tau!r}")
    tau = int(tau)
    y = panel.centered()
    e = np.empty_like(y)
    head = y[:, :tau]
    e[:, :tau] = head - head.mean(axis=1, keepdims=True)
    if tau < T:
        tail = y[:, tau:]
        e[:, tau:] = tail - tail.mean(axis=1, keepdims=True)
    e.setflags(write=False)
    return ResidualMatrix(e, tau)
