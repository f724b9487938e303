"""Scalar-state hidden Markov models: linear Gaussian and stochastic volatility.

Models operate on whole particle arrays.  Both have Gaussian transitions, which
the filter exploits to place deterministic particle sets by affine transport.
"""

from __future__ import annotations

import csv
import datetime as _dt
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import InternalConsistencyError, InvalidDataError, InvalidInputError
from .io import write_csv

LOG_2PI = math.log(2.0 * math.pi)


def norm_logpdf(x, mean, sd):
    z = (x - mean) / sd
    with np.errstate(over="ignore"):  # far tails overflow to -inf on purpose
        return -0.5 * (LOG_2PI + z * z) - np.log(sd)


@dataclass(frozen=True)
class TruncNormalPrior:
    mean: float
    sd: float
    lo: float = -math.inf
    hi: float = math.inf

    def logpdf(self, x: float) -> float:
        if not (self.lo < x < self.hi):
            return -math.inf
        a, b = (self.lo - self.mean) / self.sd, (self.hi - self.mean) / self.sd
        return float(stats.truncnorm.logpdf(x, a, b, loc=self.mean, scale=self.sd))

    def sample(self, rng, size=None):
        a, b = (self.lo - self.mean) / self.sd, (self.hi - self.mean) / self.sd
        return stats.truncnorm.rvs(a, b, loc=self.mean, scale=self.sd, size=size, random_state=rng)


@dataclass(frozen=True)
class LgssParams:
    phi: float = 0.75
    sigma_v: float = 1.0
    sigma_o: float = 0.1

    def __post_init__(self):
        if not abs(self.phi) < 1:
            raise InvalidInputError(f"|phi| must be < 1, got {self.phi}")
        if not (self.sigma_v > 0 and self.sigma_o > 0):
            raise InvalidInputError("noise standard deviations must be positive")


@dataclass(frozen=True)
class SvParams:
    mu: float = 0.0
    persistence: float = 0.95
    sigma_v: float = 0.2
    tau: float = 1.0

    def __post_init__(self):
        if not abs(self.persistence) < 1:
            raise InvalidInputError(f"|persistence| must be < 1, got {self.persistence}")
        if not (self.sigma_v > 0 and self.tau > 0):
            raise InvalidInputError("sigma_v and tau must be positive")


class StateSpaceModel:
    """Behavioural contract used by the particle filter and the PMH sampler.

    Subclasses provide Gaussian transitions through :meth:`trans_mean_sd`.
    ``param_names`` lists the parameters exposed to inference, in order.
    """

    param_names: tuple = ()

    def init_sample(self, rng, n: int) -> np.ndarray:
        raise NotImplementedError

    def init_logpdf(self, x) -> np.ndarray:
        raise NotImplementedError

    def trans_mean_sd(self, prev):
        raise NotImplementedError

    def trans_sample(self, prev, rng) -> np.ndarray:
        mean, sd = self.trans_mean_sd(prev)
        return mean + sd * rng.standard_normal(np.shape(prev))

    def trans_logpdf(self, nxt, prev) -> np.ndarray:
        mean, sd = self.trans_mean_sd(prev)
        return norm_logpdf(nxt, mean, sd)

    def obs_logpdf(self, y: float, x) -> np.ndarray:
        raise NotImplementedError

    def optimal_proposal(self, prev, y):
        """(mean, sd) of p(x_t | x_{t-1}, y_t), or None when unavailable."""
        return None

    def kernel_spec(self):
        """Scalar description for the compiled filter, or None.

        Returns (mu, phi, sigma_v, obs_kind, obs_scale, has_optimal) for a
        transition N(mu + phi (x - mu), sigma_v^2); obs_kind 0 is y ~ N(x, obs_scale^2),
        obs_kind 1 is y ~ N(0, exp(x) obs_scale).
        """
        return None

    @property
    def params_dim(self) -> int:
        return len(self.param_names)

    def theta(self) -> np.ndarray:
        raise NotImplementedError

    def with_theta(self, theta) -> "StateSpaceModel":
        raise NotImplementedError

    def prior_logpdf(self, theta) -> float:
        raise NotImplementedError


def default_lgss_priors():
    return {"phi": TruncNormalPrior(0.75, 0.5, -1.0, 1.0)}


class LgssModel(StateSpaceModel):
    """x_t = phi x_{t-1} + v_t,  y_t = x_t + e_t,  x_0 = x0_mean (+ optional spread)."""

    def __init__(self, params: LgssParams, x0_mean=0.0, x0_var=0.0, free: Sequence[str] = ("phi",), priors=None):
        self.params = params
        self.x0_mean = x0_mean
        self.x0_var = x0_var
        self.param_names = tuple(free)
        self.priors = priors or default_lgss_priors()
        missing = [k for k in self.param_names if k not in self.priors]
        if missing:
            raise InvalidInputError(f"no prior for {missing}")

    def init_sample(self, rng, n):
        if self.x0_var == 0:
            return np.full(n, float(self.x0_mean))
        return self.x0_mean + math.sqrt(self.x0_var) * rng.standard_normal(n)

    def init_logpdf(self, x):
        if self.x0_var == 0:
            return np.where(np.asarray(x) == self.x0_mean, 0.0, -np.inf)
        return norm_logpdf(x, self.x0_mean, math.sqrt(self.x0_var))

    def trans_mean_sd(self, prev):
        return self.params.phi * np.asarray(prev), self.params.sigma_v

    def obs_logpdf(self, y, x):
        return norm_logpdf(y, np.asarray(x), self.params.sigma_o)

    def optimal_proposal(self, prev, y):
        return lgss_optimal_proposal(prev, y, self.params)

    def kernel_spec(self):
        p = self.params
        return (0.0, p.phi, p.sigma_v, 0, p.sigma_o, True)

    def theta(self):
        return np.array([getattr(self.params, k) for k in self.param_names])

    def with_theta(self, theta):
        return LgssModel(
            replace(self.params, **dict(zip(self.param_names, map(float, theta)))),
            self.x0_mean, self.x0_var, self.param_names, self.priors,
        )

    def prior_logpdf(self, theta):
        return float(sum(self.priors[k].logpdf(float(v)) for k, v in zip(self.param_names, theta)))


def default_sv_priors():
    return {
        "mu": TruncNormalPrior(0.0, 1.0),
        "persistence": TruncNormalPrior(0.95, 0.05, -1.0, 1.0),
        "sigma_v": TruncNormalPrior(0.2, 0.03, 0.0, math.inf),
    }


class SvModel(StateSpaceModel):
    """Log-volatility AR(1) with zero-mean Gaussian returns of variance exp(x) tau."""

    def __init__(self, params: SvParams, free: Sequence[str] = ("mu", "persistence", "sigma_v"), priors=None):
        self.params = params
        self.param_names = tuple(free)
        self.priors = priors or default_sv_priors()
        missing = [k for k in self.param_names if k not in self.priors]
        if missing:
            raise InvalidInputError(f"no prior for {missing}")

    @property
    def stationary_sd(self):
        p = self.params
        return p.sigma_v / math.sqrt(1.0 - p.persistence ** 2)

    def init_sample(self, rng, n):
        return self.params.mu + self.stationary_sd * rng.standard_normal(n)

    def init_logpdf(self, x):
        return norm_logpdf(x, self.params.mu, self.stationary_sd)

    def trans_mean_sd(self, prev):
        p = self.params
        return p.mu + p.persistence * (np.asarray(prev) - p.mu), p.sigma_v

    def obs_logpdf(self, y, x):
        x = np.asarray(x)
        return -0.5 * (LOG_2PI + x + math.log(self.params.tau) + y * y * np.exp(-x) / self.params.tau)

    def kernel_spec(self):
        p = self.params
        return (p.mu, p.persistence, p.sigma_v, 1, p.tau, False)

    def theta(self):
        return np.array([getattr(self.params, k) for k in self.param_names])

    def with_theta(self, theta):
        return SvModel(replace(self.params, **dict(zip(self.param_names, map(float, theta)))), self.param_names, self.priors)

    def prior_logpdf(self, theta):
        return float(sum(self.priors[k].logpdf(float(v)) for k, v in zip(self.param_names, theta)))


def _streams(seed):
    state_ss, obs_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(state_ss), np.random.default_rng(obs_ss)


def lgss_simulate(T: int, p: LgssParams, x0: float = 0.0, seed=0):
    """Simulate (states, obs) of length T; state and observation noise use separate streams."""
    if T < 1:
        raise InvalidInputError("T must be at least 1")
    rs, ro = _streams(seed)
    ev = p.sigma_v * rs.standard_normal(T)
    eo = p.sigma_o * ro.standard_normal(T)
    x = np.empty(T)
    prev = x0
    for t in range(T):
        prev = p.phi * prev + ev[t]
        x[t] = prev
    return x, x + eo


def lgss_optimal_proposal(x_prev, y, p: LgssParams):
    prec = p.sigma_v ** -2 + p.sigma_o ** -2
    var = 1.0 / prec
    mean = var * (y / p.sigma_o ** 2 + p.phi * np.asarray(x_prev) / p.sigma_v ** 2)
    return mean, math.sqrt(var)


def kalman_filter(obs, p: LgssParams, x0_mean=0.0, x0_var=0.0):
    """Exact filtering means, variances and log-likelihood for the LGSS model."""
    obs = np.asarray(obs, dtype=float)
    T = obs.size
    means, variances = np.empty(T), np.empty(T)
    m, P = float(x0_mean), float(x0_var)
    ll = 0.0
    for t in range(T):
        m_pred = p.phi * m
        P_pred = p.phi ** 2 * P + p.sigma_v ** 2
        S = P_pred + p.sigma_o ** 2
        if not S > 0:
            raise InternalConsistencyError(f"non-positive innovation variance at t={t}")
        resid = obs[t] - m_pred
        ll += -0.5 * (LOG_2PI + math.log(S) + resid * resid / S)
        K = P_pred / S
        m = m_pred + K * resid
        P = (1.0 - K) * P_pred
        means[t], variances[t] = m, P
    return means, variances, ll


def kalman_loglik(obs, p: LgssParams, x0_mean=0.0, x0_var=0.0) -> float:
    if np.size(obs) < 1:
        raise InvalidInputError("need at least one observation")
    return kalman_filter(obs, p, x0_mean, x0_var)[2]


def sv_simulate(T: int, p: SvParams, seed=0):
    if T < 1:
        raise InvalidInputError("T must be at least 1")
    rs, ro = _streams(seed)
    ev = rs.standard_normal(T + 1)
    eo = ro.standard_normal(T)
    x = np.empty(T)
    prev = p.mu + p.sigma_v / math.sqrt(1.0 - p.persistence ** 2) * ev[0]
    for t in range(T):
        prev = p.mu + p.persistence * (prev - p.mu) + p.sigma_v * ev[t + 1]
        x[t] = prev
    y = np.sqrt(np.exp(x) * p.tau) * eo
    return x, y


def log_returns(prices) -> np.ndarray:
    prices = np.asarray(prices, dtype=float)
    bad = np.flatnonzero(~(prices > 0))
    if bad.size:
        raise InvalidDataError(f"non-positive price {prices[bad[0]]}", row=int(bad[0]) + 1)
    return np.diff(np.log(prices))


def read_price_csv(path, start=None, end=None):
    """Read a ``date,close`` CSV; returns (dates, closes) within [start, end].

    Dates must be ISO-8601 and strictly increasing; closes must be positive.
    Row numbers in errors count data rows from 1.
    """
    dates, closes = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["date", "close"]:
            raise InvalidDataError("header must be 'date,close'")
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise InvalidDataError("missing close column", row=row_no)
            try:
                day = _dt.date.fromisoformat(row[0].strip())
            except ValueError:
                raise InvalidDataError(f"bad date {row[0]!r}", row=row_no) from None
            try:
                close = float(row[1])
            except ValueError:
                raise InvalidDataError(f"bad close {row[1]!r}", row=row_no) from None
            if not (math.isfinite(close) and close > 0):
                raise InvalidDataError(f"close must be positive, got {row[1]}", row=row_no)
            if dates and day <= dates[-1]:
                raise InvalidDataError("dates must be strictly increasing", row=row_no)
            dates.append(day)
            closes.append(close)
    if start is not None or end is not None:
        lo = _dt.date.fromisoformat(str(start)) if start is not None else _dt.date.min
        hi = _dt.date.fromisoformat(str(end)) if end is not None else _dt.date.max
        keep = [i for i, d in enumerate(dates) if lo <= d <= hi]
        dates = [dates[i] for i in keep]
        closes = [closes[i] for i in keep]
    return dates, np.array(closes)


def write_price_csv(path, dates, closes):
    write_csv(path, ["date", "close"], [(d.isoformat(), c) for d, c in zip(dates, closes)])


def write_simulated_csv(path, states, obs):
    write_csv(path, ["t", "x_true", "y"], [(t + 1, x, y) for t, (x, y) in enumerate(zip(states, obs))])
