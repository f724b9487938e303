"""Sequential greedy generation of Chebyshev particle configurations.

One point is added per round: a fresh uniform candidate pool is scored by the
potential of the current configuration and the candidate sitting in the
deepest hole (minimal potential) is proposed.  A proposal is kept only if it is
at least ``r_min`` away from the previously accepted point and passes a
randomized relative-move test; otherwise the round is redrawn.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from . import riesz_core as rc
from .errors import DegenerateDensityError, DegeneratePoolError, InvalidInputError
from .io import atomic_write_text, fmt


@dataclass(frozen=True)
class GeneratorConfig:
    n_points: int
    pool_size: int = 512
    max_retries: int = 32
    seed: int = 0
    domain_lo: Sequence[float] = (0.0,)
    domain_hi: Sequence[float] = (1.0,)
    refit_interval: int = 0
    refit_bandwidth: float = 0.0
    denom_epsilon: float = 1e-6

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.domain_lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.domain_hi, dtype=float))
        if self.n_points < 2:
            raise InvalidInputError("n_points must be at least 2")
        if self.pool_size < 2:
            raise InvalidInputError("pool_size must be at least 2")
        if self.max_retries < 1:
            raise InvalidInputError("max_retries must be positive")
        if lo.shape != hi.shape or not np.all(lo < hi):
            raise InvalidInputError("need domain_lo < domain_hi componentwise")
        if self.refit_interval < 0 or self.refit_bandwidth < 0:
            raise InvalidInputError("refit_interval and refit_bandwidth must be non-negative")
        if not self.denom_epsilon > 0:
            raise InvalidInputError("denom_epsilon must be positive")

    @property
    def lo(self) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.domain_lo, dtype=float))

    @property
    def hi(self) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.domain_hi, dtype=float))

    @property
    def d(self) -> int:
        return self.lo.shape[0]


@dataclass
class GenerationResult:
    config: rc.Configuration
    # log-potential of each point when it was selected (nan for the initial point)
    potential_at_selection: list = field(default_factory=list)
    running_min_separation: list = field(default_factory=list)
    forced: list = field(default_factory=list)
    rejections: list = field(default_factory=list)
    refits: int = 0


def _pool(rng, cfg: GeneratorConfig, size: int | None = None) -> np.ndarray:
    return rng.uniform(cfg.lo, cfg.hi, size=(size or cfg.pool_size, cfg.d))


def initial_point(density: rc.DensityOracle, cfg: GeneratorConfig, rng=None) -> np.ndarray:
    """Candidate closest to a self-normalized importance estimate of the target mean."""
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    cand = _pool(rng, cfg)
    logf = density.logpdf(cand)
    if not np.any(np.isfinite(logf)):
        raise DegenerateDensityError("target density vanishes on every initial candidate")
    w = np.exp(logf - np.max(logf))
    mean = (w @ cand) / w.sum()
    k = int(np.argmin(np.sum((cand - mean) ** 2, axis=1)))
    return cand[k]


def best_candidate(candidates, config: rc.Configuration, density, p: rc.EnergyParams):
    """Return (point, log_potential) of the minimal-potential candidate.

    Candidates coinciding with configuration points are dropped first.
    """
    cand = rc.as_points(candidates, config.d)
    dist = rc._distances(cand, config.points)
    cand = cand[np.all(dist > 0, axis=1)]
    if cand.shape[0] == 0:
        raise DegeneratePoolError("no admissible candidates after de-duplication")
    k, score = rc.argmin_potential(cand, config, density, p)
    return cand[k], score


def next_point(config, density, p, cfg: GeneratorConfig, rng, candidates=None):
    """Propose the next point from a fresh pool (or the given ``candidates``)."""
    if config.n < 1:
        raise InvalidInputError("configuration must be non-empty")
    pool = _pool(rng, cfg) if candidates is None else candidates
    return best_candidate(pool, config, density, p)


def accept_rule(x_next, x_prev, r_min: float, cfg: GeneratorConfig, rng) -> bool:
    """Separation test against the previous point plus a randomized relative-move test.

    ``r_min`` may be 0 while the configuration holds a single point.
    """
    if r_min < 0:
        raise InvalidInputError("r_min must be non-negative")
    x_next, x_prev = np.asarray(x_next, float), np.asarray(x_prev, float)
    step = math.hypot(*(x_next - x_prev))
    u = rng.uniform()
    if step < r_min:
        return False
    return step / (math.hypot(*x_prev) + cfg.denom_epsilon) >= u


def refit_density(config: rc.Configuration, bandwidth: float = 0.0) -> rc.DensityOracle:
    """Gaussian KDE over the configuration; Silverman's rule when ``bandwidth`` is 0."""
    if config.n < 2:
        raise InvalidInputError("refit needs at least two points")
    data = config.points.T
    if bandwidth > 0:
        # gaussian_kde scales its factor by the data covariance
        sd = float(np.sqrt(np.mean(np.var(data, axis=1, ddof=1))))
        kde = stats.gaussian_kde(data, bw_method=bandwidth / sd)
    else:
        kde = stats.gaussian_kde(data, bw_method="silverman")
    return rc.DensityOracle(lambda x: kde.logpdf(x.T))


def generate(density: rc.DensityOracle, p: rc.EnergyParams, cfg: GeneratorConfig) -> GenerationResult:
    """Greedy one-point-at-a-time generation of ``cfg.n_points`` distinct points.

    The RNG is consumed identically for every ``n_points``, so a shorter run is
    an exact prefix of a longer one with the same seed.
    """
    if cfg.d != p.d:
        raise InvalidInputError(f"domain dimension {cfg.d} != energy dimension {p.d}")
    rng = np.random.default_rng(cfg.seed)
    x0 = initial_point(density, cfg, rng)
    config = rc.Configuration(x0[None, :])
    out = GenerationResult(config, [math.nan], [math.nan], [False], [0])
    target = density
    while config.n < cfg.n_points:
        r_min = rc.min_separation(config) if config.n >= 2 else 0.0
        x_prev = config.points[-1]
        best = None
        accepted = False
        tries = 0
        for tries in range(1, cfg.max_retries + 1):
            cand, score = next_point(config, target, p, cfg, rng)
            if best is None or score < best[1]:
                best = (cand, score)
            if accept_rule(cand, x_prev, r_min, cfg, rng):
                accepted = True
                break
        if not accepted:
            cand, score = best
        config = config.extend(cand)
        out.potential_at_selection.append(score)
        out.running_min_separation.append(rc.min_separation(config))
        out.forced.append(not accepted)
        out.rejections.append(tries - 1 if accepted else tries)
        if cfg.refit_interval and config.n % cfg.refit_interval == 0:
            target = refit_density(config, cfg.refit_bandwidth)
            out.refits += 1
    out.config = config
    return out


def normal_scores(config: rc.Configuration) -> np.ndarray:
    """Map a configuration on [0, 1] to standard-normal scores.

    Levels are first compressed to [0.5/n, 1 - 0.5/n] so equispaced points land
    on the centred quantile levels (k + 0.5)/n, keeping the edge points finite.
    """
    u = config.points[:, 0]
    n = u.size
    return stats.norm.ppf((u * (n - 1) + 0.5) / n)


def standard_normal_set(n_points: int, seed: int = 0, p: rc.EnergyParams | None = None, pool_size: int = 512) -> np.ndarray:
    """Chebyshev particles for the standard normal, in generation order."""
    p = p or rc.EnergyParams()
    cfg = GeneratorConfig(n_points=n_points, seed=seed, pool_size=pool_size)
    res = generate(rc.uniform_density(0.0, 1.0), p, cfg)
    return normal_scores(res.config)


def write_configuration_csv(path, result: GenerationResult) -> None:
    pts = result.config.points
    d = pts.shape[1]
    header = ["index"] + [f"coord_{k}" for k in range(d)] + ["potential_at_selection"]
    lines = [",".join(header)]
    for i in range(pts.shape[0]):
        row = [str(i)] + [fmt(v) for v in pts[i]] + [fmt(result.potential_at_selection[i])]
        lines.append(",".join(row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_configuration_csv(path):
    """Return (points, potential_at_selection) from a configuration CSV."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return np.empty((0, 0)), np.empty(0)
    coords = sorted((k for k in rows[0] if k.startswith("coord_")), key=lambda k: int(k[6:]))
    pts = np.array([[float(r[k]) for k in coords] for r in rows])
    pot = np.array([float(r["potential_at_selection"]) for r in rows])
    return pts, pot
