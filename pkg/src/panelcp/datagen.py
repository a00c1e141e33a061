"""Synthetic panels from the mean-shift model

    Y_it = mu_i + delta_i * 1{t > tau} + sigma * eps_it

with IID, AR(1) or GARCH(1,1) errors driven by Gaussian or Student-t
innovations. Every error path has unit marginal variance.
"""

import math
import re
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .errors import ParameterError
from .panel import PanelDataset
from .rng import check_seed, generator

GARCH_BURN_IN = 500
# substream 0 drives the model quantities; panel i uses substream i + 1
_MODEL_STREAM = 0


@dataclass(frozen=True)
class IID:
    def label(self):
        return "iid"


@dataclass(frozen=True)
class AR1:
    phi: float = 0.3

    def __post_init__(self):
        if not abs(self.phi) < 1:
            raise ParameterError(f"AR(1) is stationary only for |phi| < 1, got {self.phi}")

    def label(self):
        return f"ar1({self.phi:g})"


@dataclass(frozen=True)
class GARCH11:
    alpha0: float = 1.0
    alpha1: float = 0.1
    beta1: float = 0.2

    def __post_init__(self):
        if self.alpha0 <= 0 or self.alpha1 < 0 or self.beta1 < 0:
            raise ParameterError("GARCH(1,1) needs alpha0 > 0 and alpha1, beta1 >= 0")
        # finite unconditional variance, needed for the unit-variance scaling
        if self.alpha1 + self.beta1 >= 1:
            raise ParameterError(
                f"GARCH(1,1) needs alpha1 + beta1 < 1, got {self.alpha1 + self.beta1:g}"
            )

    @property
    def unconditional_variance(self):
        return self.alpha0 / (1.0 - self.alpha1 - self.beta1)

    def label(self):
        return f"garch11({self.alpha0:g},{self.alpha1:g},{self.beta1:g})"


ErrorProcess = Union[IID, AR1, GARCH11]


@dataclass(frozen=True)
class Gaussian:
    def label(self):
        return "gaussian"

    def draw(self, rng, size):
        return rng.standard_normal(size)


@dataclass(frozen=True)
class StudentT:
    """Student-t innovations, rescaled to unit variance unless ``standardize`` is off."""

    nu: float = 5.0
    standardize: bool = True

    def __post_init__(self):
        if self.standardize and not self.nu > 2:
            raise ParameterError(f"unit-variance t innovations need nu > 2, got {self.nu}")
        if not self.nu > 0:
            raise ParameterError(f"nu must be positive, got {self.nu}")

    def label(self):
        return f"t{self.nu:g}" + ("" if self.standardize else "-raw")

    def draw(self, rng, size):
        x = rng.standard_t(self.nu, size)
        if self.standardize:
            x *= math.sqrt((self.nu - 2.0) / self.nu)
        return x


Innovations = Union[Gaussian, StudentT]

_NUM = r"\s*([-+0-9.eE]+)\s*"


def parse_process(text):
    """Parse ``iid``, ``ar1``, ``ar1(0.3)``, ``garch11`` or ``garch11(1,0.1,0.2)``."""
    if not isinstance(text, str):
        return text
    s = text.strip().lower().replace(" ", "")
    if s == "iid":
        return IID()
    if s in ("ar1", "ar(1)"):
        return AR1()
    if s in ("garch11", "garch(1,1)"):
        return GARCH11()
    m = re.fullmatch(rf"ar1\({_NUM}\)", s)
    if m:
        return AR1(float(m.group(1)))
    m = re.fullmatch(rf"garch11\({_NUM},{_NUM},{_NUM}\)", s)
    if m:
        return GARCH11(*map(float, m.groups()))
    raise ParameterError(f"unknown error process {text!r}")


def parse_innovations(text):
    """Parse ``gaussian``/``normal``, ``t5``, ``t(5)`` or ``t5-raw`` (unscaled)."""
    if not isinstance(text, str):
        return text
    s = text.strip().lower().replace(" ", "")
    if s in ("gaussian", "normal", "n(0,1)"):
        return Gaussian()
    m = re.fullmatch(r"(?:t|student_t)\(?([0-9.]+)\)?(-raw)?", s)
    if m:
        return StudentT(float(m.group(1)), standardize=m.group(2) is None)
    raise ParameterError(f"unknown innovation law {text!r}")


def _recursion(process, z):
    # z: (N, L) unit-variance innovations; returns unit-variance errors
    if isinstance(process, IID):
        return z
    if isinstance(process, AR1):
        phi = process.phi
        eps = np.empty_like(z)
        eps[:, 0] = z[:, 0]
        scale = math.sqrt(1.0 - phi * phi)
        for t in range(1, z.shape[1]):
            eps[:, t] = phi * eps[:, t - 1] + scale * z[:, t]
        return eps
    if isinstance(process, GARCH11):
        a0, a1, b1 = process.alpha0, process.alpha1, process.beta1
        var = np.full(z.shape[0], process.unconditional_variance)
        prev = np.zeros(z.shape[0])
        eps = np.empty_like(z)
        for t in range(z.shape[1]):
            var = a0 + a1 * prev * prev + b1 * var
            prev = np.sqrt(var) * z[:, t]
            eps[:, t] = prev
        return eps / math.sqrt(process.unconditional_variance)
    raise ParameterError(f"unsupported error process {process!r}")


def generate_errors(process, innovations, N, T, seed):
    """N x T matrix of unit-variance error paths, independent across rows.

    Row i is driven by its own substream of ``seed``, so it does not change
    when N changes. AR(1) paths start from a unit-variance draw (the exact
    stationary law for Gaussian innovations); GARCH paths discard a burn-in
    of ``GARCH_BURN_IN`` steps.
    """
    process = parse_process(process)
    innovations = parse_innovations(innovations)
    seed = check_seed(seed)
    if N < 1 or T < 1:
        raise ParameterError(f"N and T must be positive, got N={N}, T={T}")
    burn = GARCH_BURN_IN if isinstance(process, GARCH11) else 0
    z = np.empty((N, burn + T))
    for i in range(N):
        z[i] = innovations.draw(generator(seed, i + 1), burn + T)
    return _recursion(process, z)[:, burn:]


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation cell.

    ``tau`` is the last pre-change time; ``tau == T`` is the null. A share
    ``change_fraction`` of the panels (rounded up) receives a shift drawn
    uniformly from ``change_range``; panel means are N(0,1) when
    ``mu_law == "normal"`` and 0 when ``"zero"``.
    """

    n_panels: int
    horizon: int
    tau: int
    process: ErrorProcess = field(default_factory=IID)
    innovations: Innovations = field(default_factory=Gaussian)
    change_fraction: float = 0.0
    change_range: tuple = (1.0, 3.0)
    mu_law: str = "normal"
    sigma: float = 1.0
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "process", parse_process(self.process))
        object.__setattr__(self, "innovations", parse_innovations(self.innovations))
        object.__setattr__(self, "change_range", tuple(float(v) for v in self.change_range))
        if self.n_panels < 1:
            raise ParameterError(f"n_panels must be >= 1, got {self.n_panels}")
        if self.horizon < 2:
            raise ParameterError(f"horizon must be >= 2, got {self.horizon}")
        if not 1 <= self.tau <= self.horizon:
            raise ParameterError(f"tau must lie in 1..{self.horizon}, got {self.tau}")
        if not 0.0 <= self.change_fraction <= 1.0:
            raise ParameterError(f"change_fraction must lie in [0, 1], got {self.change_fraction}")
        lo, hi = self.change_range
        if len(self.change_range) != 2 or lo > hi:
            raise ParameterError(f"bad change_range {self.change_range}")
        if self.mu_law not in ("normal", "zero"):
            raise ParameterError(f"mu_law must be 'normal' or 'zero', got {self.mu_law!r}")
        if not self.sigma >= 0:
            raise ParameterError(f"sigma must be non-negative, got {self.sigma}")
        check_seed(self.seed)

    @property
    def is_null(self):
        return self.tau == self.horizon or self.change_fraction == 0

    @property
    def n_changed(self):
        # guard against 0.33 * 100 = 33.000000000000004 style round-up
        return min(self.n_panels, math.ceil(self.change_fraction * self.n_panels - 1e-9))

    @property
    def scenario_id(self):
        if self.name:
            return self.name
        return (
            f"T{self.horizon}-N{self.n_panels}-{self.process.label()}-"
            f"{self.innovations.label()}-tau{self.tau}-f{self.change_fraction:g}"
        )

    def with_seed(self, seed):
        return replace(self, seed=seed)


def _model_draws(config):
    N, T = config.n_panels, config.horizon
    rng = generator(config.seed, _MODEL_STREAM)
    mu = rng.standard_normal(N)  # drawn either way so mu_law leaves delta untouched
    if config.mu_law == "zero":
        mu = np.zeros(N)
    delta = np.zeros(N)
    k = config.n_changed
    if k and config.tau < T:
        chosen = np.sort(rng.choice(N, size=k, replace=False))
        delta[chosen] = rng.uniform(*config.change_range, size=k)
    return mu, delta


def generate_panel(config, return_truth=False):
    """Draw one panel dataset from ``config`` (deterministic in ``config.seed``).

    With ``return_truth`` the panel means and shifts are returned as well.
    """
    N, T = config.n_panels, config.horizon
    mu, delta = _model_draws(config)
    y = np.broadcast_to(mu[:, None], (N, T)).copy()
    y[:, config.tau:] += delta[:, None]
    if config.sigma > 0:
        y += config.sigma * generate_errors(config.process, config.innovations, N, T, config.seed)
    data = PanelDataset(y)
    return (data, mu, delta) if return_truth else data
