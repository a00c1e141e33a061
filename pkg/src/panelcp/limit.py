"""Monte Carlo approximation of the limiting null laws and test decisions."""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from . import _functionals
from .covariance import LimitCovariance
from .errors import ParameterError
from .rng import generator

MIN_NULL_DRAWS = 100
PSD_RTOL = 1e-8


class StatisticKind(str, Enum):
    CUSUM = "cusum"
    RATIO = "ratio"


def _matrix(lam):
    m = lam.matrix if isinstance(lam, LimitCovariance) else lam
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParameterError(f"covariance must be square, got shape {m.shape}")
    return m


def mvn_factor(lam):
    """Square-root factor F with F @ F.T == Lambda, via eigendecomposition."""
    m = _matrix(lam)
    if not np.allclose(m, m.T, rtol=0, atol=1e-12 * max(1.0, np.abs(m).max())):
        raise ParameterError("covariance must be symmetric")
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    if w[0] < -PSD_RTOL * max(abs(w[-1]), np.finfo(float).tiny):
        raise ParameterError(f"covariance is not PSD (min eigenvalue {w[0]:.3g})")
    return v * np.sqrt(np.clip(w, 0.0, None))


def sample_mvn(lam, count, seed):
    """``count`` draws from N(0, Lambda), one per row."""
    if int(count) != count or count < 1:
        raise ParameterError(f"count must be a positive integer, got {count}")
    m = _matrix(lam)
    f = mvn_factor(m)
    z = generator(seed).standard_normal((int(count), f.shape[0]))
    x = z @ f.T
    # zero-variance coordinates are exactly zero, not eigh round-off
    x[:, np.diag(m) == 0] = 0.0
    return x


def cusum_limit_functional(x):
    """max_{t=1..T-1} |x_t - (t/T) x_T|; accepts a single path or a batch (rows)."""
    out = _functionals.bridge_max(x)
    return float(out) if np.ndim(out) == 0 else out


def ratio_limit_functional(x):
    """Limit of the ratio statistic evaluated on a path (or each row of a batch).

    With z_t = x_T - x_t, the value is the max over t = 2..T-2 of
    max_{s<=t} |x_s - (s/t) x_t| / max_{t<=s<=T-1} |z_s - ((T-s)/(T-t)) z_t|,
    skipping t with zero denominator.
    """
    out = _functionals.ratio_max(x)
    return float(out) if np.ndim(out) == 0 else out


_FUNCTIONALS = {
    StatisticKind.CUSUM: cusum_limit_functional,
    StatisticKind.RATIO: ratio_limit_functional,
}


@dataclass(frozen=True)
class NullDistribution:
    """Sorted Monte Carlo sample of a limiting functional."""

    statistic_kind: StatisticKind
    samples: np.ndarray
    lambda_used: Optional[LimitCovariance]
    seed: Optional[int]

    @property
    def size(self):
        return len(self.samples)

    @classmethod
    def from_draws(cls, draws, kind, lambda_used=None, seed=None):
        kind = StatisticKind(kind)
        draws = np.asarray(draws, dtype=float)
        if draws.ndim != 2 or draws.shape[0] < MIN_NULL_DRAWS:
            raise ParameterError(
                f"need at least {MIN_NULL_DRAWS} null draws, got {draws.shape[0] if draws.ndim == 2 else 0}"
            )
        samples = np.sort(np.asarray(_FUNCTIONALS[kind](draws), dtype=float))
        samples.setflags(write=False)
        return cls(kind, samples, lambda_used, seed)

    def quantile(self, level):
        """Order statistic number ceil(level * M) (1-based)."""
        if not 0 < level < 1:
            raise ParameterError(f"quantile level must lie in (0, 1), got {level}")
        M = self.size
        k = math.ceil(level * M - 1e-9)
        return float(self.samples[min(max(k, 1), M) - 1])


def build_null(lam, kind, M, seed):
    """Simulate M values of the limiting functional ``kind`` under Lambda."""
    if int(M) != M or M < MIN_NULL_DRAWS:
        raise ParameterError(f"M must be an integer >= {MIN_NULL_DRAWS}, got {M}")
    draws = sample_mvn(lam, M, seed)
    lam_obj = lam if isinstance(lam, LimitCovariance) else LimitCovariance(_matrix(lam))
    return NullDistribution.from_draws(draws, kind, lam_obj, seed)


@dataclass(frozen=True)
class TestResult:
    statistic_value: float
    critical_value: float
    p_value: float
    alpha: float
    reject: bool
    sigma_hat_used: Optional[float] = None

    __test__ = False  # keep pytest from collecting this class


def decide(statistic_value, null, alpha, sigma_hat=None):
    """Compare a statistic with its simulated null law.

    The critical value is the ceil((1-alpha) M)-th order statistic; for the
    CUSUM test the null sample is first scaled by ``sigma_hat``. The
    p-value is the share of (scaled) null values >= the statistic.
    """
    if not 0 < alpha < 1:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    scale = 1.0
    if null.statistic_kind is StatisticKind.CUSUM:
        if sigma_hat is None:
            raise ParameterError("the CUSUM test needs sigma_hat")
        if not sigma_hat > 0:
            raise ParameterError(f"sigma_hat must be positive, got {sigma_hat}")
        scale = float(sigma_hat)
    crit = scale * null.quantile(1 - alpha)
    scaled = scale * null.samples
    p = float(np.count_nonzero(scaled >= statistic_value)) / null.size
    return TestResult(
        float(statistic_value),
        crit,
        p,
        float(alpha),
        bool(statistic_value > crit),
        scale if null.statistic_kind is StatisticKind.CUSUM else None,
    )
