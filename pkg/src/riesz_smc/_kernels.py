"""Compiled particle-filter loop for scalar Gaussian-transition models.

Consumes the generator in exactly the same order as the array implementation
in :mod:`smc_filter`, so both paths agree up to floating-point rounding.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

LOG_2PI = math.log(2.0 * math.pi)

BOOTSTRAP, OPTIMAL, CHEBYSHEV = 0, 1, 2


@njit(cache=True, inline="always")
def _obs_logpdf(y, x, kind, scale, log_scale):
    if kind == 0:
        z = (y - x) / scale
        return -0.5 * (LOG_2PI + z * z) - log_scale
    return -0.5 * (LOG_2PI + x + log_scale + y * y * math.exp(-x) / scale)


@njit(cache=True)
def run_filter(x0, obs, rng, mode, scores, mu, phi, sv, kind, scale, adaptive, ess_threshold):
    T = obs.size
    N = x0.size
    particles = np.empty((T, N))
    weights = np.empty((T, N))
    ancestors = np.empty((T, N), dtype=np.int64)
    incr = np.empty(T)
    means = np.empty(T)

    prev_x = x0.copy()
    anc = np.arange(N)
    log_w_prev = np.full(N, -math.log(N))
    x = np.empty(N)
    logw = np.empty(N)
    prev = np.empty(N)
    log_sv = math.log(sv)
    log_scale = math.log(scale)
    if kind == 0:
        var = 1.0 / (sv ** -2 + scale ** -2)
        opt_sd = math.sqrt(var)
    else:
        var = 0.0
        opt_sd = sv
    log_s = math.log(opt_sd)

    for t in range(T):
        y = obs[t]
        for i in range(N):
            prev[i] = prev_x[anc[i]]
        if mode == BOOTSTRAP:
            z = rng.standard_normal(N)
            for i in range(N):
                x[i] = mu + phi * (prev[i] - mu) + sv * z[i]
                logw[i] = _obs_logpdf(y, x[i], kind, scale, log_scale)
        else:
            if mode == OPTIMAL:
                z = rng.standard_normal(N)
            else:
                z = scores
            use_opt = kind == 0
            for i in range(N):
                tm = mu + phi * (prev[i] - mu)
                if use_opt:
                    m = var * (y / scale ** 2 + phi * prev[i] / sv ** 2)
                    s = opt_sd
                else:
                    m = tm
                    s = sv
                zi = z[i]
                xi = m + s * zi
                x[i] = xi
                log_q = -0.5 * (LOG_2PI + zi * zi) - log_s
                u = (xi - tm) / sv
                lw = (-0.5 * (LOG_2PI + u * u) - log_sv) + _obs_logpdf(y, xi, kind, scale, log_scale) - log_q
                logw[i] = -np.inf if math.isnan(lw) else lw
        ancestors[t] = anc

        mx = -np.inf
        for i in range(N):
            v = log_w_prev[i] + logw[i]
            logw[i] = v
            if v > mx:
                mx = v
        if not math.isfinite(mx):
            return t, particles, weights, ancestors, incr, means
        acc = 0.0
        for i in range(N):
            acc += math.exp(logw[i] - mx)
        total = mx + math.log(acc)
        if not math.isfinite(total):
            return t, particles, weights, ancestors, incr, means
        incr[t] = total
        ss = 0.0
        for i in range(N):
            w = math.exp(logw[i] - total)
            weights[t, i] = w
            ss += w * w
            particles[t, i] = x[i]

        if adaptive and 1.0 / ss >= ess_threshold * N:
            mean = 0.0
            for i in range(N):
                anc[i] = i
                log_w_prev[i] = math.log(weights[t, i])
                mean += weights[t, i] * x[i]
            means[t] = mean
        else:
            cdf = np.cumsum(weights[t])
            cdf[N - 1] = 1.0
            idx = np.searchsorted(cdf, rng.random(N), side="right")
            mean = 0.0
            for i in range(N):
                a = idx[i] if idx[i] < N else N - 1
                anc[i] = a
                log_w_prev[i] = -math.log(N)
                mean += x[a]
            means[t] = mean / N
        prev_x[:] = x
    return -1, particles, weights, ancestors, incr, means
