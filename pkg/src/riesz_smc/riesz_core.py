"""Weighted Riesz kernel, configuration energies and point-set diagnostics.

The pair kernel is

    K(x, y) = omega(x, y) / |x - y|^m,
    omega(x, y) = exp(b^(-m / 2d)),  b = max(alpha * g(x) g(y) + beta * |x - y|, base_floor)

with g(x) = -ln f(x) for a target density f.  For m = 40 the weight alone
overflows double range for separations well inside the unit interval, so every
aggregate is carried in log space.  Log-kernels are split into a *lead* term
``b^(-m/2d)`` and a *rest* term ``-m ln r``; sums are accumulated relative to the
largest lead so that pairs sharing the clamped lead still compare by distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import stats
from scipy.spatial import cKDTree
from scipy.special import logsumexp

from .errors import (
    InsufficientPointsError,
    InvalidInputError,
    SingularKernelError,
    UnsupportedDimensionError,
)

KS_C05 = 1.358


@dataclass(frozen=True)
class EnergyParams:
    m: float = 40.0
    d: int = 1
    alpha: float = -1.0
    beta: float = 1.0
    base_floor: float = 1e-8

    def __post_init__(self):
        if not (self.d >= 1 and int(self.d) == self.d):
            raise InvalidInputError(f"d must be a positive integer, got {self.d}")
        if not self.m > self.d:
            raise InvalidInputError(f"need m > d, got m={self.m}, d={self.d}")
        if not self.beta > 0:
            raise InvalidInputError(f"beta must be positive, got {self.beta}")
        if not self.base_floor > 0:
            raise InvalidInputError("base_floor must be positive")

    @property
    def weight_exponent(self) -> float:
        """The exponent ``-m / (2d)`` applied to the weight base."""
        return -self.m / (2.0 * self.d)


def as_points(x, d: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a float array of shape (n, d)."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if d in (None, 1) else arr.reshape(1, -1)
    if arr.ndim != 2:
        raise InvalidInputError(f"points must be at most 2-D, got shape {arr.shape}")
    if d is not None and arr.shape[1] != d:
        raise InvalidInputError(f"expected dimension {d}, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("non-finite coordinates")
    return arr


def as_point(x, d: int | None = None) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1 or (d is not None and arr.shape[0] != d):
        raise InvalidInputError(f"expected a point of dimension {d}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("non-finite coordinates")
    return arr


class DensityOracle:
    """Log target density plus the derived local-weight field gamma.

    ``logpdf`` maps an (k, d) array to k log-densities; it may be unnormalized.
    """

    def __init__(
        self,
        logpdf: Callable[[np.ndarray], np.ndarray],
        f_floor: float = 1e-300,
        gamma_floor: float = 0.0,
    ):
        if not f_floor > 0:
            raise InvalidInputError("f_floor must be positive")
        if gamma_floor < 0:
            raise InvalidInputError("gamma_floor must be non-negative")
        self._logpdf = logpdf
        self.f_floor = f_floor
        self.gamma_floor = gamma_floor

    def logpdf(self, x) -> np.ndarray:
        pts = np.asarray(x, dtype=float)
        if pts.ndim < 2:
            pts = pts.reshape(-1, 1)
        return np.asarray(self._logpdf(pts), dtype=float).reshape(pts.shape[0])

    def gamma(self, x) -> np.ndarray:
        logf = np.maximum(self.logpdf(x), math.log(self.f_floor))
        return np.maximum(-logf, self.gamma_floor)


def uniform_density(lo=0.0, hi=1.0) -> DensityOracle:
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    log_vol = float(np.sum(np.log(hi - lo)))

    def logpdf(x):
        inside = np.all((x >= lo) & (x <= hi), axis=1)
        return np.where(inside, -log_vol, -np.inf)

    return DensityOracle(logpdf)


def gaussian_density(mean=0.0, sd=1.0, lo=None, hi=None) -> DensityOracle:
    """Normal density, truncated (and renormalized) to [lo, hi] if bounds are given.

    Coordinates are independent with common ``mean``/``sd``.
    """
    a = -np.inf if lo is None else (lo - mean) / sd
    b = np.inf if hi is None else (hi - mean) / sd
    dist = stats.truncnorm(a, b, loc=mean, scale=sd)

    def logpdf(x):
        return np.sum(dist.logpdf(x), axis=1)

    return DensityOracle(logpdf)


def exponential_density(rate=1.0, hi=None) -> DensityOracle:
    """Exponential density on [0, hi] (renormalized), applied per coordinate."""
    log_mass = 0.0 if hi is None else math.log1p(-math.exp(-rate * hi))

    def logpdf(x):
        ok = (x >= 0) & (True if hi is None else x <= hi)
        lp = np.where(ok, math.log(rate) - rate * x - log_mass, -np.inf)
        return np.sum(lp, axis=1)

    return DensityOracle(logpdf)


class Configuration:
    """Ordered set of distinct points in R^d.

    The distance matrix is computed on first use and never mutated; ``extend``
    returns a new configuration.
    """

    def __init__(self, points, d: int | None = None, _dist: np.ndarray | None = None):
        pts = as_points(points, d)
        pts.setflags(write=False)
        self.points = pts
        if _dist is not None:
            _dist.setflags(write=False)
            self.__dict__["pairwise_dist"] = _dist
        if self.n >= 2 and self._min_offdiag() <= 0:
            raise InvalidInputError("configuration points must be pairwise distinct")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        return self.points[i]

    @cached_property
    def pairwise_dist(self) -> np.ndarray:
        dist = _distances(self.points, self.points)
        dist.setflags(write=False)
        return dist

    def _min_offdiag(self) -> float:
        dist = self.pairwise_dist
        iu = np.triu_indices(self.n, 1)
        return float(dist[iu].min())

    def extend(self, point) -> "Configuration":
        p = as_point(point, self.d)
        row = _distances(p[None, :], self.points)[0]
        if np.any(row <= 0):
            raise InvalidInputError("new point coincides with an existing point")
        n = self.n
        dist = np.empty((n + 1, n + 1))
        dist[:n, :n] = self.pairwise_dist
        dist[n, :n] = row
        dist[:n, n] = row
        dist[n, n] = 0.0
        return Configuration(np.vstack([self.points, p]), _dist=dist)

    def prefix(self, k: int) -> "Configuration":
        """First ``k`` points in generation order."""
        dist = np.array(self.pairwise_dist[:k, :k])
        return Configuration(self.points[:k], _dist=dist)


def _distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[1] == 1:
        return np.abs(a[:, 0][:, None] - b[:, 0][None, :])
    diff = np.abs(a[:, None, :] - b[None, :, :])
    # scaled so that tiny separations do not underflow to zero when squared
    s = diff.max(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore"):
        q = np.where(s > 0, diff / s, 0.0)
    return s[..., 0] * np.sqrt(np.sum(q * q, axis=-1))


# -- kernel ---------------------------------------------------------------


def _log_kernel_parts(r, g_i, g_j, p: EnergyParams):
    """Return (lead, rest) with log K = lead + rest, elementwise."""
    base = np.maximum(p.alpha * g_i * g_j + p.beta * r, p.base_floor)
    # capped so that lead differences stay finite for extreme floors
    lead = np.minimum(np.power(base, p.weight_exponent), 1e300)
    rest = -p.m * np.log(r)
    return lead, rest


def _split_logsumexp(lead: np.ndarray, rest: np.ndarray, axis: int = -1):
    """log(sum exp(lead + rest)) as (L, residual) with L the maximal lead.

    Terms are sorted before summation so the result does not depend on their order.
    """
    big = np.max(lead, axis=axis, keepdims=True)
    v = np.sort((lead - big) + rest, axis=axis)
    return np.squeeze(big, axis=axis), logsumexp(v, axis=axis)


def argmin_potential(candidates: np.ndarray, config: Configuration, density: DensityOracle, p: EnergyParams):
    """Index and log-potential of the minimal-potential candidate.

    Same ordering as ``np.lexsort`` on :func:`potential_parts`, but residuals are
    only formed for candidates tied on the leading term.
    """
    r = _distances(candidates, config.points)
    if np.any(r == 0):
        raise SingularKernelError("candidate coincides with a configuration point")
    gy = density.gamma(candidates)
    gx = density.gamma(config.points)
    base = np.maximum(p.alpha * gy[:, None] * gx[None, :] + p.beta * r, p.base_floor)
    lead = np.minimum(np.power(base, p.weight_exponent), 1e300)
    big = lead.max(axis=1)
    tied = np.flatnonzero(big == big.min())
    lt = lead[tied]
    v = np.sort((lt - big[tied][:, None]) - p.m * np.log(r[tied]), axis=1)
    res = logsumexp(v, axis=1)
    k = int(np.argmin(res))
    return int(tied[k]), float(big[tied[k]] + res[k])


def _norm(v: np.ndarray) -> float:
    return math.hypot(*v)


def log_pair_weight(xi, xj, density: DensityOracle, p: EnergyParams) -> float:
    xi, xj = as_point(xi, p.d), as_point(xj, p.d)
    r = _norm(xi - xj)
    g = density.gamma(np.vstack([xi, xj]))
    base = max(p.alpha * g[0] * g[1] + p.beta * r, p.base_floor)
    return min(base ** p.weight_exponent, 1e300)


def pair_weight(xi, xj, density: DensityOracle, p: EnergyParams) -> float:
    """omega(xi, xj); overflows to ``inf`` when the log-weight exceeds ~709."""
    lw = log_pair_weight(xi, xj, density, p)
    return math.exp(lw) if lw < 709.78 else math.inf


def log_pair_kernel(xi, xj, density: DensityOracle, p: EnergyParams) -> float:
    xi, xj = as_point(xi, p.d), as_point(xj, p.d)
    r = _norm(xi - xj)
    if r == 0:
        raise SingularKernelError("kernel evaluated at coincident points")
    return log_pair_weight(xi, xj, density, p) - p.m * math.log(r)


def pair_kernel(xi, xj, density: DensityOracle, p: EnergyParams) -> float:
    lk = log_pair_kernel(xi, xj, density, p)
    return math.exp(lk) if lk < 709.78 else math.inf


# -- aggregates -----------------------------------------------------------


def _pair_parts(config: Configuration, density: DensityOracle, p: EnergyParams):
    iu = np.triu_indices(config.n, 1)
    g = density.gamma(config.points)
    r = config.pairwise_dist[iu]
    return _log_kernel_parts(r, g[iu[0]], g[iu[1]], p)


def log_pair_sum(config: Configuration, density: DensityOracle, p: EnergyParams) -> float:
    """log of sum_{i<j} K(x_i, x_j)."""
    if config.n < 2:
        raise InsufficientPointsError("energy needs at least two points")
    lead, rest = _pair_parts(config, density, p)
    big, res = _split_logsumexp(lead, rest)
    return float(big + res)


def log_total_energy(config: Configuration, density: DensityOracle, p: EnergyParams) -> float:
    return log_pair_sum(config, density, p) / p.m


def total_energy(config: Configuration, density: DensityOracle, p: EnergyParams) -> float:
    """(sum_{i<j} K(x_i, x_j))^(1/m); ``inf`` if it leaves double range."""
    le = log_total_energy(config, density, p)
    return math.exp(le) if le < 709.78 else math.inf


def potential_parts(candidates, config: Configuration, density: DensityOracle, p: EnergyParams):
    """Vectorized log-potential of each candidate as (lead_max, residual) arrays.

    Candidates are ordered by potential via ``np.lexsort((residual, lead_max))``.
    """
    y = as_points(candidates, config.d)
    r = _distances(y, config.points)
    if np.any(r == 0):
        raise SingularKernelError("candidate coincides with a configuration point")
    gy = density.gamma(y)
    gx = density.gamma(config.points)
    lead, rest = _log_kernel_parts(r, gy[:, None], gx[None, :], p)
    return _split_logsumexp(lead, rest, axis=1)


def log_potential_at(y, config: Configuration, density: DensityOracle, p: EnergyParams) -> float:
    if config.n < 1:
        raise InsufficientPointsError("empty configuration")
    big, res = potential_parts(as_point(y, config.d)[None, :], config, density, p)
    return float(big[0] + res[0])


def potential_at(y, config: Configuration, density: DensityOracle, p: EnergyParams) -> float:
    """sum_i K(x_i, y): the field felt at ``y``."""
    lp = log_potential_at(y, config, density, p)
    return math.exp(lp) if lp < 709.78 else math.inf


# -- geometry -------------------------------------------------------------


def min_separation(config: Configuration) -> float:
    if config.n < 2:
        raise InsufficientPointsError("separation needs at least two points")
    return config._min_offdiag()


def covering_radius(config: Configuration, domain_mesh) -> float:
    """Largest distance from a mesh point to its nearest configuration point."""
    if config.n == 0:
        raise InvalidInputError("empty configuration")
    mesh = np.asarray(domain_mesh, dtype=float)
    if mesh.size == 0:
        raise InvalidInputError("empty domain mesh")
    mesh = as_points(mesh, config.d)
    dist, _ = cKDTree(config.points).query(mesh)
    return float(np.max(dist))


def covering_exponent(m: float, d: int) -> float:
    """Scaling exponent of the covering radius in n for optimal configurations."""
    return -(m - 2 * d) / (d * (m - d))


class UniformityStat(NamedTuple):
    raw: float  # (1/n) sum_{i != j} |x_i - x_j|
    mean: float  # mean pairwise distance, raw / (n - 1)


def uniformity_statistic(config: Configuration) -> UniformityStat:
    n = config.n
    if n < 2:
        raise InsufficientPointsError("need at least two points")
    if config.d == 1:
        x = np.sort(config.points[:, 0])
        k = np.arange(n)
        half = float(np.sum(x * (2 * k - n + 1)))
    else:
        iu = np.triu_indices(n, 1)
        half = float(np.sum(config.pairwise_dist[iu]))
    raw = 2.0 * half / n
    return UniformityStat(raw, raw / (n - 1))


class KsResult(NamedTuple):
    statistic: float
    passed: bool


def ks_uniformity_test(config: Configuration, target_cdf) -> KsResult:
    """Two-sided KS test at level 0.05 against ``target_cdf``.

    For d > 1 pass a sequence of d marginal CDFs; the statistic is the largest
    per-coordinate value and the test passes only if every coordinate does.
    """
    n = config.n
    if config.d == 1:
        cdfs: Sequence = [target_cdf]
    elif isinstance(target_cdf, (list, tuple)) and len(target_cdf) == config.d:
        cdfs = target_cdf
    else:
        raise UnsupportedDimensionError("d > 1 needs one marginal CDF per coordinate")
    crit = KS_C05 / math.sqrt(n)
    worst = 0.0
    for k, cdf in enumerate(cdfs):
        stat = stats.kstest(config.points[:, k], cdf).statistic
        worst = max(worst, float(stat))
    return KsResult(worst, worst < crit)


def qq_slope(config: Configuration, ppf) -> float:
    """Least-squares slope of sorted sample vs theoretical quantiles (d = 1)."""
    x = np.sort(config.points[:, 0])
    n = x.size
    theo = ppf((np.arange(n) + 0.5) / n)
    return float(np.polyfit(theo, x, 1)[0])


class EnergyBoundCheck(NamedTuple):
    log_lhs: float
    log_rhs: float
    holds: bool


def energy_lower_bound(config: Configuration, density: DensityOracle, p: EnergyParams) -> EnergyBoundCheck:
    """Check  sum_{i<j} K  >=  (1/(n-1)) sum_{i<j} r^-(m+1)  in log form."""
    n = config.n
    if n < 2:
        raise InsufficientPointsError("need at least two points")
    lhs = log_pair_sum(config, density, p)
    iu = np.triu_indices(n, 1)
    rhs = float(logsumexp(np.sort(-(p.m + 1) * np.log(config.pairwise_dist[iu])))) - math.log(n - 1)
    return EnergyBoundCheck(lhs, rhs, lhs >= rhs)
