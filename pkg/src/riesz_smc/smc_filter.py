"""Particle filter with bootstrap, optimal and Chebyshev-particle proposals.

In ``chebyshev`` mode a precomputed set of standard-normal scores ``z`` is
transported per particle: slot i with ancestor a gets x = m(a) + s(a) z[i mod N'],
where (m, s) is the optimal proposal when the model has one and the transition
otherwise.  The importance density is the matching Gaussian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import ContractViolation, FilterDegeneracyError, InvalidInputError
from .hmm_models import LOG_2PI, StateSpaceModel
from .io import write_csv

MODES = ("bootstrap", "optimal", "chebyshev")
BACKENDS = ("auto", "numpy")
LOG_FLOOR = -745.0


@dataclass(frozen=True)
class FilterConfig:
    n_particles: int
    proposal_mode: str = "bootstrap"
    cheb_set: np.ndarray | None = None
    seed: int = 0
    adaptive_resampling: bool = False
    ess_threshold: float = 0.5
    backend: str = "auto"  # "auto" uses the compiled loop when the model supports it

    def __post_init__(self):
        if self.n_particles < 2:
            raise InvalidInputError("n_particles must be at least 2")
        if self.proposal_mode not in MODES:
            raise InvalidInputError(f"proposal_mode must be one of {MODES}")
        if self.backend not in BACKENDS:
            raise InvalidInputError(f"backend must be one of {BACKENDS}")
        if not 0 < self.ess_threshold <= 1:
            raise InvalidInputError("ess_threshold must be in (0, 1]")
        if self.proposal_mode == "chebyshev":
            if self.cheb_set is None or np.size(self.cheb_set) == 0:
                raise InvalidInputError("chebyshev mode needs a non-empty cheb_set")
            if not np.all(np.isfinite(self.cheb_set)):
                raise InvalidInputError("cheb_set must be finite")

    def with_seed(self, seed) -> "FilterConfig":
        return replace(self, seed=seed)


@dataclass
class ParticleSystem:
    particles: np.ndarray  # (T, N)
    weights: np.ndarray  # (T, N), normalized per row
    ancestors: np.ndarray  # (T, N), ancestors[t] indexes particles[t-1]
    loglik_increments: np.ndarray  # (T,)

    @property
    def ess(self) -> np.ndarray:
        return 1.0 / np.sum(self.weights ** 2, axis=1)


@dataclass
class FilterResult:
    state_means: np.ndarray
    loglik: float
    system: ParticleSystem


def resample_multinomial(weights, rng) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ContractViolation(f"weights must be normalized, sum={w.sum()!r}")
    return _resample(w, rng)


def _resample(w: np.ndarray, rng) -> np.ndarray:
    cdf = np.cumsum(w)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(w.size), side="right")
    return np.minimum(idx, w.size - 1)


def chebyshev_index(i, n_cheb: int):
    """Chebyshev particle used by slot ``i``."""
    if np.any(np.asarray(i) < 0):
        raise InvalidInputError("slot index must be non-negative")
    return i % n_cheb


def slot_scores(cheb_set, n: int) -> np.ndarray:
    """Scores used by slots 0..n-1, standardized to zero mean and unit variance.

    Matching the first two moments keeps the transported set centred on the
    proposal even when only part of the set is in use (n < N' or n not a
    multiple of N').
    """
    z = np.asarray(cheb_set, dtype=float).ravel()[chebyshev_index(np.arange(n), np.size(cheb_set))]
    sd = z.std()
    if sd == 0:
        raise InvalidInputError("slot scores are all equal")
    return (z - z.mean()) / sd


def _logsumexp(v: np.ndarray) -> float:
    m = v.max()
    if not np.isfinite(m):
        return float(m)
    return float(m + math.log(np.exp(v - m).sum()))


def propagate(prev_states, ancestors, y, model: StateSpaceModel, cfg: FilterConfig, rng, scores=None):
    """Move particles to the next time step and return their log incremental weights.

    ``scores`` may carry precomputed :func:`slot_scores` for chebyshev mode.
    """
    if not math.isfinite(y):
        raise InvalidInputError("observation must be finite")
    prev = np.asarray(prev_states)[ancestors]
    n = prev.size
    mode = cfg.proposal_mode
    if mode == "bootstrap":
        x = model.trans_sample(prev, rng)
        return x, model.obs_logpdf(y, x)
    if mode == "optimal":
        prop = model.optimal_proposal(prev, y)
        if prop is None:
            raise InvalidInputError("model has no optimal proposal")
        mean, sd = prop
        z = rng.standard_normal(n)
    else:
        prop = model.optimal_proposal(prev, y)
        mean, sd = prop if prop is not None else model.trans_mean_sd(prev)
        z = slot_scores(cfg.cheb_set, n) if scores is None else scores
    x = mean + sd * z
    log_q = -0.5 * (LOG_2PI + z * z) - np.log(sd)
    with np.errstate(divide="ignore", invalid="ignore"):
        logw = model.trans_logpdf(x, prev) + model.obs_logpdf(y, x) - log_q
    return x, np.where(np.isnan(logw), -np.inf, logw)


def filter_run(model: StateSpaceModel, obs, cfg: FilterConfig) -> FilterResult:
    """Run the filter over ``obs``.

    ``state_means[t]`` is the average of the equally weighted population obtained
    by resampling at t; without resampling (adaptive mode) it is the weighted mean.
    """
    obs = np.asarray(obs, dtype=float)
    T, N = obs.size, cfg.n_particles
    if T < 1:
        raise InvalidInputError("need at least one observation")
    rng = np.random.default_rng(cfg.seed)
    particles = np.empty((T, N))
    weights = np.empty((T, N))
    ancestors = np.empty((T, N), dtype=np.int64)
    incr = np.empty(T)
    means = np.empty(T)

    x = model.init_sample(rng, N)
    scores = slot_scores(cfg.cheb_set, N) if cfg.proposal_mode == "chebyshev" else None
    spec = model.kernel_spec() if cfg.backend == "auto" else None
    if spec is not None:
        mu, phi, sv, kind, scale, has_opt = spec
        if cfg.proposal_mode == "optimal" and not has_opt:
            raise InvalidInputError("model has no optimal proposal")
        mode = MODES.index(cfg.proposal_mode)
        sc = scores if scores is not None else np.zeros(0)
        fail, particles, weights, ancestors, incr, means = _kernels.run_filter(
            np.asarray(x, dtype=float), obs, rng, mode, sc, float(mu), float(phi), float(sv),
            int(kind), float(scale), bool(cfg.adaptive_resampling), float(cfg.ess_threshold),
        )
        if fail >= 0:
            raise FilterDegeneracyError(int(fail))
        return FilterResult(means, float(incr.sum()), ParticleSystem(particles, weights, ancestors, incr))

    log_w_prev = np.full(N, -math.log(N))
    anc = np.arange(N)
    for t in range(T):
        x, logw = propagate(x, anc, obs[t], model, cfg, rng, scores)
        ancestors[t] = anc
        joint = log_w_prev + logw
        total = _logsumexp(joint)
        if not np.isfinite(total):
            raise FilterDegeneracyError(t)
        incr[t] = total
        W = np.exp(joint - total)
        particles[t] = x
        weights[t] = W
        if cfg.adaptive_resampling and 1.0 / np.sum(W * W) >= cfg.ess_threshold * N:
            anc = np.arange(N)
            log_w_prev = np.log(W)
            means[t] = W @ x
        else:
            anc = _resample(W, rng)
            log_w_prev = np.full(N, -math.log(N))
            means[t] = x[anc].mean()
    return FilterResult(means, float(incr.sum()), ParticleSystem(particles, weights, ancestors, incr))


def filtering_metrics(state_means, reference_states):
    """(log_bias, log_mse): logs of time-averaged |error| and squared error, floored at -745."""
    a, b = np.asarray(state_means, float), np.asarray(reference_states, float)
    if a.shape != b.shape:
        raise InvalidInputError("length mismatch")
    err = a - b
    mae, mse = float(np.mean(np.abs(err))), float(np.mean(err * err))
    log_bias = math.log(mae) if mae > 0 else LOG_FLOOR
    log_mse = math.log(mse) if mse > 0 else LOG_FLOOR
    return max(log_bias, LOG_FLOOR), max(log_mse, LOG_FLOOR)


def write_filter_csv(path, result: FilterResult) -> None:
    sysm = result.system
    rows = [(t + 1, m, inc, e) for t, (m, inc, e) in enumerate(zip(result.state_means, sysm.loglik_increments, sysm.ess))]
    write_csv(path, ["t", "state_mean", "loglik_increment", "ess"], rows)
