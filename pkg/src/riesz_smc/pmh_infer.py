"""Pseudo-marginal particle Metropolis-Hastings over model parameters."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import FilterDegeneracyError, InvalidInputError, UndefinedAcfError
from .hmm_models import StateSpaceModel
from .io import write_csv, write_json
from .smc_filter import FilterConfig, filter_run

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PmhConfig:
    iterations: int
    step_sizes: Sequence[float]
    filter: FilterConfig
    init_params: Sequence[float]
    seed: int = 0
    burn_in: int | None = None  # defaults to 20% of iterations

    def __post_init__(self):
        if self.iterations < 1:
            raise InvalidInputError("iterations must be positive")
        if not 0 <= self.burn_in_ < self.iterations:
            raise InvalidInputError("need 0 <= burn_in < iterations")
        if len(self.step_sizes) != len(self.init_params):
            raise InvalidInputError("step_sizes and init_params differ in length")
        if not all(h > 0 for h in self.step_sizes):
            raise InvalidInputError("step sizes must be positive")

    @property
    def burn_in_(self) -> int:
        return self.iterations // 5 if self.burn_in is None else self.burn_in


@dataclass
class PmhTrace:
    params: np.ndarray  # (iterations, P)
    logliks: np.ndarray  # (iterations,)
    accepted: np.ndarray  # (iterations,) bool; entry 0 is the initial state
    param_names: tuple = ()
    failures: list = field(default_factory=list)


def propose_params(theta, step_sizes, rng) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    h = np.asarray(step_sizes, dtype=float)
    if theta.shape != h.shape:
        raise InvalidInputError("theta and step_sizes differ in shape")
    return theta + h * rng.standard_normal(theta.shape)


def acceptance_log_ratio(loglik_new, logprior_new, loglik_old, logprior_old) -> float:
    """log of the MH acceptance probability for a symmetric proposal."""
    if logprior_new == -math.inf or loglik_new == -math.inf:
        return -math.inf
    return min(0.0, (loglik_new + logprior_new) - (loglik_old + logprior_old))


def iteration_seed(master: int, k: int) -> int:
    return int(np.random.SeedSequence([int(master), int(k)]).generate_state(1, np.uint64)[0])


def run_chain(
    model: StateSpaceModel,
    obs,
    cfg: PmhConfig,
    loglik_fn: Callable[[StateSpaceModel, np.ndarray, int], float] | None = None,
) -> PmhTrace:
    """Random-walk PMH; every proposal gets a fresh filter seed.

    ``loglik_fn(model, obs, seed)`` replaces the particle estimate, e.g. with an
    exact likelihood.  The current state's estimate is never refreshed.
    """
    obs = np.asarray(obs, dtype=float)

    def estimate(m, k):
        if loglik_fn is not None:
            return float(loglik_fn(m, obs, iteration_seed(cfg.seed, k)))
        if obs.size == 0:
            return 0.0
        fcfg = cfg.filter.with_seed(iteration_seed(cfg.seed, k))
        return filter_run(m, obs, fcfg).loglik

    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed), 0xC0FFEE]))
    K, P = cfg.iterations, len(cfg.init_params)
    params = np.empty((K, P))
    logliks = np.empty(K)
    accepted = np.zeros(K, dtype=bool)

    theta = np.asarray(cfg.init_params, dtype=float)
    lp = model.prior_logpdf(theta)
    if lp == -math.inf:
        raise InvalidInputError("initial parameters outside prior support")
    ll = estimate(model.with_theta(theta), 0)
    params[0], logliks[0], accepted[0] = theta, ll, True
    failures = []
    for k in range(1, K):
        prop = propose_params(theta, cfg.step_sizes, rng)
        lp_new = model.prior_logpdf(prop)
        ll_new = -math.inf
        if lp_new > -math.inf:
            try:
                ll_new = estimate(model.with_theta(prop), k)
            except FilterDegeneracyError as exc:
                log.warning("iteration %d: %s; proposal rejected", k, exc)
                failures.append(k)
        log_a = acceptance_log_ratio(ll_new, lp_new, ll, lp)
        if math.log(rng.uniform()) < log_a:
            theta, lp, ll = prop, lp_new, ll_new
            accepted[k] = True
        params[k], logliks[k] = theta, ll
    return PmhTrace(params, logliks, accepted, tuple(model.param_names), failures)


def acf(series, max_lag: int) -> np.ndarray:
    s = np.asarray(series, dtype=float)
    K = s.size
    if K <= max_lag:
        raise InvalidInputError("series shorter than max_lag + 1")
    c = s - s.mean()
    v = float(np.mean(c * c))
    if v == 0:
        raise UndefinedAcfError("series has zero variance")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for lag in range(1, max_lag + 1):
        out[lag] = float(np.dot(c[:-lag], c[lag:])) / ((K - lag) * v)
    return out


class PosteriorSummary(NamedTuple):
    mean: np.ndarray
    variance: np.ndarray
    acceptance_rate: float


def posterior_summary(trace: PmhTrace, burn_in: int) -> PosteriorSummary:
    post = trace.params[burn_in:]
    if post.shape[0] < 2:
        raise InvalidInputError("need at least two post-burn-in samples")
    # shifted moments: exact zero variance for a constant trace
    d = post - post[0]
    return PosteriorSummary(post[0] + d.mean(axis=0), d.var(axis=0, ddof=1), float(trace.accepted[burn_in:].mean()))


def write_trace_csv(path, trace: PmhTrace) -> None:
    P = trace.params.shape[1]
    header = ["iter", "accepted", "loglik"] + [f"param_{j}" for j in range(P)]
    rows = [
        [k, int(trace.accepted[k]), trace.logliks[k], *trace.params[k]]
        for k in range(trace.params.shape[0])
    ]
    write_csv(path, header, rows)


def write_summary_json(path, trace: PmhTrace, burn_in: int, max_lag: int = 50) -> dict:
    """``acf`` holds the first parameter's ACF; ``acf_by_param`` holds all of them."""
    summ = posterior_summary(trace, burn_in)
    post = trace.params[burn_in:]
    lags = {}
    names = [str(n) for n in (trace.param_names or range(post.shape[1]))]
    for j, name in enumerate(names):
        try:
            vals = acf(post[:, j], min(max_lag, post.shape[0] - 1))
            lags[name] = {str(l): float(v) for l, v in enumerate(vals)}
        except UndefinedAcfError:
            lags[name] = {}
    out = {
        "param_names": names,
        "posterior_mean": summ.mean.tolist(),
        "posterior_variance": summ.variance.tolist(),
        "acceptance_rate": summ.acceptance_rate,
        "burn_in": burn_in,
        "acf": lags[names[0]] if names else {},
        "acf_by_param": lags,
    }
    write_json(path, out)
    return out
