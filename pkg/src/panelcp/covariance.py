"""Kernel estimates of the within-panel correlation structure and the
covariance matrix of the limiting partial-sum vector.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .changepoint import compute_residuals, estimate_changepoint
from .errors import (
    DegenerateDataError,
    EstimationError,
    ParameterError,
    UnsupportedHorizonError,
)
from .panel import as_panel

DEFAULT_BANDWIDTH = 2.0
# repair refuses matrices whose most negative eigenvalue exceeds this share
# of the largest one
REPAIR_LIMIT = 0.1


def parzen(x):
    """Parzen window."""
    a = np.abs(np.asarray(x, dtype=float))
    return np.where(
        a <= 0.5,
        1.0 - 6.0 * a**2 + 6.0 * a**3,
        np.where(a <= 1.0, 2.0 * (1.0 - a) ** 3, 0.0),
    )


def bartlett(x):
    """Bartlett (triangular) window."""
    return np.maximum(0.0, 1.0 - np.abs(np.asarray(x, dtype=float)))


_BUILTIN = {"parzen": parzen, "bartlett": bartlett}


@dataclass(frozen=True)
class KernelSpec:
    """Lag window and bandwidth.

    ``kind`` is ``"parzen"``, ``"bartlett"`` or ``"custom"``; a custom
    kernel passes a vectorised ``func``, which is sanity-checked on a grid
    (value 1 at 0, even, bounded by 1).
    """

    kind: str = "parzen"
    bandwidth: float = DEFAULT_BANDWIDTH
    func: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ParameterError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.kind == "custom":
            if self.func is None:
                raise ParameterError("a custom kernel needs func")
            grid = np.linspace(-3.0, 3.0, 601)
            vals = np.asarray(self.func(grid), dtype=float) * np.ones_like(grid)
            k0 = float(np.asarray(self.func(np.array([0.0])), dtype=float).ravel()[0])
            if abs(k0 - 1.0) > 1e-12:
                raise ParameterError("custom kernel must equal 1 at 0")
            if not np.allclose(vals, vals[::-1], atol=1e-12):
                raise ParameterError("custom kernel must be even")
            if np.any(np.abs(vals) > 1 + 1e-12):
                raise ParameterError("custom kernel must be bounded by 1")
        elif self.kind in _BUILTIN:
            if self.func is not None:
                raise ParameterError(f"func is only allowed for custom kernels, not {self.kind}")
        else:
            raise ParameterError(
                f"unknown kernel {self.kind!r}; choose parzen, bartlett or custom"
            )

    def __call__(self, x):
        fn = self.func if self.kind == "custom" else _BUILTIN[self.kind]
        return np.asarray(fn(x), dtype=float) * np.ones_like(np.asarray(x, dtype=float))


def kernel_value(spec, x):
    """kappa(x) for the kernel in ``spec`` (the bandwidth is not applied)."""
    out = spec(x)
    return float(out) if np.ndim(out) == 0 else out


def flat_kernel():
    """kappa = 1 everywhere, i.e. no down-weighting of any lag."""
    return KernelSpec("custom", 1.0, func=lambda x: np.ones_like(np.asarray(x, dtype=float)))


def sigma2_hat(residuals):
    """Mean squared residual over all N*T cells."""
    e = getattr(residuals, "residuals", residuals)
    e = np.asarray(e, dtype=float)
    s2 = _lag_moment(e, 0)
    if not s2 > 0:
        raise DegenerateDataError("all residuals are zero; variance estimate is 0")
    return s2


def _lag_moment(e, lag):
    # divisor N*T at every lag; sigma2_hat shares this exact expression so
    # that the lag-0 autocorrelation is 1 to the last bit
    N, T = e.shape
    return float(np.sum(e[:, : T - lag] * e[:, lag:]) / (N * T))


def empirical_autocorrelation(residuals, sigma2):
    """rho_hat_t for t = 0..T-1, divisor sigma2 * N * T, clamped to [-1, 1]."""
    e = np.asarray(getattr(residuals, "residuals", residuals), dtype=float)
    if not sigma2 > 0:
        raise DegenerateDataError("sigma2_hat must be positive")
    T = e.shape[1]
    rho = np.array([_lag_moment(e, t) / sigma2 for t in range(T)])
    return np.clip(rho, -1.0, 1.0)


def _weighted_lags(rho, spec):
    rho = np.asarray(rho, dtype=float)
    if spec is None:
        return rho.copy()
    lags = np.arange(len(rho))
    return spec(lags / spec.bandwidth) * rho


def cumulative_autocorrelation(rho, spec=None):
    """r(t) = sum_{|s|<t} (t - |s|) kappa(s/h) rho_|s| for t = 1..T.

    ``spec=None`` applies no kernel (the population formula).
    """
    g = _weighted_lags(rho, spec)
    T = len(g)
    t = np.arange(1, T + 1)[:, None]
    s = np.arange(T)[None, :]
    mult = np.where(s == 0, 1.0, 2.0) * np.clip(t - s, 0, None)
    return mult @ g


def shifted_cumulative_correlation(rho, spec=None):
    """R(t, v) = sum_{s<=t} sum_{t<u<=v} kappa((u-s)/h) rho_{u-s}.

    Returns a T x T array with ``R[t-1, v-1]`` filled for t < v and zeros
    on and below the diagonal.
    """
    g = _weighted_lags(rho, spec)
    T = len(g)
    idx = np.arange(T)
    toeplitz = g[np.abs(idx[:, None] - idx[None, :])]
    prefix = toeplitz.cumsum(axis=0).cumsum(axis=1)
    # prefix[t-1, v-1] = sum_{s<=t, u<=v}; strip the u <= t block
    R = prefix - np.diag(prefix)[:, None]
    return np.triu(R, k=1)


@dataclass(frozen=True)
class CorrelationStructure:
    """Autocorrelations with their cumulative transforms on horizon T.

    ``rho[k]`` is the lag-k correlation (k = 0..T-1), ``r[t-1]`` is r(t)
    and ``R[t-1, v-1]`` is R(t, v) for t < v.
    """

    rho: np.ndarray
    r: np.ndarray
    R: np.ndarray

    @property
    def horizon(self):
        return len(self.rho)

    @classmethod
    def from_rho(cls, rho, spec=None):
        rho = np.asarray(rho, dtype=float)
        if rho.ndim != 1 or len(rho) < 1:
            raise ParameterError("rho must be a non-empty vector")
        return cls(rho, cumulative_autocorrelation(rho, spec),
                   shifted_cumulative_correlation(rho, spec))

    @classmethod
    def iid(cls, T):
        rho = np.zeros(T)
        rho[0] = 1.0
        return cls.from_rho(rho)

    @classmethod
    def ar1(cls, T, phi):
        if not abs(phi) < 1:
            raise ParameterError(f"AR(1) needs |phi| < 1, got {phi}")
        return cls.from_rho(phi ** np.arange(T, dtype=float))


@dataclass(frozen=True)
class LimitCovariance:
    """Covariance of the limiting partial-sum vector [X_1..X_T].

    ``min_eigenvalue`` is recorded before the PSD repair.
    """

    matrix: np.ndarray
    source: str = "true"
    min_eigenvalue: float = 0.0

    @property
    def horizon(self):
        return self.matrix.shape[0]

    @property
    def repaired(self):
        return self.min_eigenvalue < 0


def psd_repair(matrix, limit=REPAIR_LIMIT):
    """Clip negative eigenvalues of a symmetric matrix to zero.

    Returns the repaired matrix and the smallest eigenvalue before repair.
    """
    a = np.asarray(matrix, dtype=float)
    a = 0.5 * (a + a.T)
    w, v = np.linalg.eigh(a)
    lo, hi = w[0], w[-1]
    if hi <= 0 or lo < -limit * hi:
        raise EstimationError(
            f"covariance estimate far from PSD (eigenvalues {lo:.3g} .. {hi:.3g})"
        )
    if lo >= 0:
        return a, float(lo)
    fixed = (v * np.clip(w, 0.0, None)) @ v.T
    return 0.5 * (fixed + fixed.T), float(lo)


def build_lambda(structure, source="true"):
    """Assemble Lambda with lambda_tt = r(t), lambda_tv = r(t) + R(t, v) (t < v)."""
    r, R = np.asarray(structure.r, dtype=float), np.asarray(structure.R, dtype=float)
    T = len(r)
    upper = np.triu(r[:, None] + R, k=1)
    lam = upper + upper.T + np.diag(r)
    lam, lo = psd_repair(lam)
    lam.setflags(write=False)
    return LimitCovariance(lam, source, lo)


@dataclass(frozen=True)
class CovarianceFit:
    """Every intermediate of the estimation pipeline."""

    changepoint: object
    residuals: object
    sigma2: float
    structure: CorrelationStructure
    limit: LimitCovariance
    kernel: KernelSpec

    @property
    def sigma(self):
        return float(np.sqrt(self.sigma2))


def fit_covariance(data, spec=None, weights=None):
    """Change point -> residuals -> sigma2 -> rho_hat -> kernel sums -> Lambda."""
    panel = as_panel(data)
    if panel.horizon < 4:
        raise UnsupportedHorizonError(f"covariance estimation requires T ≥ 4, got T={panel.horizon}")
    spec = spec or KernelSpec()
    cp = estimate_changepoint(panel, weights)
    res = compute_residuals(panel, cp.tau_hat)
    s2 = sigma2_hat(res)
    rho = empirical_autocorrelation(res, s2)
    structure = CorrelationStructure.from_rho(rho, spec)
    return CovarianceFit(cp, res, s2, structure, build_lambda(structure, "estimated"), spec)


def estimate_covariance_pipeline(data, spec=None, weights=None):
    """Estimated Lambda for a panel dataset (see :func:`fit_covariance`)."""
    return fit_covariance(data, spec, weights).limit
