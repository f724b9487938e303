import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from riesz_smc import riesz_core as rc
from riesz_smc.errors import (
    InsufficientPointsError,
    InvalidInputError,
    SingularKernelError,
    UnsupportedDimensionError,
)

P40 = rc.EnergyParams()
UNIFORM = rc.uniform_density(0.0, 1.0)
NORMAL = rc.gaussian_density(0.0, 1.0)

coord = st.floats(0.0, 1.0, allow_nan=False)


def constant_gamma(g):
    return rc.DensityOracle(lambda x: np.full(x.shape[0], -float(g)))


# -- high-precision oracles ------------------------------------------------

mp.mp.dps = 50


def mp_log_kernel(xi, xj, gi, gj, p):
    r = mp.mpf(abs(xi - xj))
    base = max(mp.mpf(p.alpha) * gi * gj + mp.mpf(p.beta) * r, mp.mpf(p.base_floor))
    return base ** (mp.mpf(-p.m) / (2 * p.d)) - p.m * mp.log(r)


def mp_log_sum(logs):
    big = max(logs)
    return big + mp.log(mp.fsum(mp.exp(v - big) for v in logs))


def mp_gamma(density, x):
    return mp.mpf(float(density.gamma(np.array([[x]]))[0]))


def mp_log_pair_sum(points, density, p):
    g = [mp_gamma(density, x) for x in points]
    logs = [
        mp_log_kernel(mp.mpf(points[i]), mp.mpf(points[j]), g[i], g[j], p)
        for i in range(len(points))
        for j in range(i + 1, len(points))
    ]
    return mp_log_sum(logs)


# -- EnergyParams / Configuration -------------------------------------------


def test_energy_params_validation():
    with pytest.raises(InvalidInputError):
        rc.EnergyParams(m=1, d=1)
    with pytest.raises(InvalidInputError):
        rc.EnergyParams(beta=0)
    with pytest.raises(InvalidInputError):
        rc.EnergyParams(base_floor=0)
    assert P40.weight_exponent == -20.0


def test_configuration_distances_and_distinctness():
    pts = np.random.default_rng(0).uniform(size=(30, 2))
    c = rc.Configuration(pts)
    brute = np.array([[math.dist(a, b) for b in pts] for a in pts])
    np.testing.assert_allclose(c.pairwise_dist, brute, rtol=1e-12, atol=0)
    with pytest.raises(InvalidInputError):
        rc.Configuration([[0.1], [0.1]])
    with pytest.raises(InvalidInputError):
        rc.Configuration([[np.nan]])
    ext = rc.Configuration(pts[:10]).extend(pts[10])
    np.testing.assert_array_equal(ext.pairwise_dist, rc.Configuration(pts[:11]).pairwise_dist)
    with pytest.raises(InvalidInputError):
        ext.extend(pts[3])
    with pytest.raises(ValueError):
        c.pairwise_dist[0, 1] = 5.0


def test_density_gamma_floor():
    d = rc.DensityOracle(lambda x: np.full(x.shape[0], -np.inf))
    assert np.all(np.isfinite(d.gamma(np.zeros((3, 1)))))
    assert d.gamma(np.zeros((1, 1)))[0] == pytest.approx(-math.log(1e-300))
    # a density above 1 would give negative gamma; floored at 0
    assert rc.gaussian_density(0.0, 0.01).gamma(np.zeros((1, 1)))[0] == 0.0


# -- pair weight and kernel --------------------------------------------------


def test_pair_weight_reduces_to_beta_r():
    p = rc.EnergyParams(m=2, d=1)
    assert rc.pair_weight(0.0, 1.0, UNIFORM, p) == pytest.approx(math.e, rel=1e-15)


def test_pair_weight_clamped_branch():
    lw = rc.log_pair_weight(0.2, 0.7, constant_gamma(2.0), P40)
    assert lw == pytest.approx(1e-8 ** -20, rel=1e-14)
    assert rc.pair_weight(0.2, 0.7, constant_gamma(2.0), P40) == math.inf


def test_pair_weight_normal_density_high_precision():
    g0, g1 = mp_gamma(NORMAL, 0.0), mp_gamma(NORMAL, 1.0)
    assert float(g0) == pytest.approx(0.5 * math.log(2 * math.pi), rel=1e-14)
    # the default coupling clamps this pair; a weaker coupling keeps the base positive
    for p in (P40, rc.EnergyParams(alpha=-0.1)):
        base = max(p.alpha * g0 * g1 + p.beta, mp.mpf(p.base_floor))
        oracle = base ** mp.mpf(p.weight_exponent)
        assert rc.log_pair_weight(0.0, 1.0, NORMAL, p) == pytest.approx(float(oracle), rel=1e-12)
    p = rc.EnergyParams(alpha=-0.1)
    oracle = mp.exp((1 - mp.mpf("0.1") * g0 * g1) ** -20)
    assert rc.pair_weight(0.0, 1.0, NORMAL, p) == pytest.approx(float(oracle), rel=1e-12)


def test_pair_kernel_divides_weight_by_power():
    p = rc.EnergyParams(m=2, d=1)
    k = rc.pair_kernel(0.0, 2.0, UNIFORM, p)
    assert k / rc.pair_weight(0.0, 2.0, UNIFORM, p) == pytest.approx(0.25, rel=1e-15)


def test_pair_kernel_errors():
    with pytest.raises(SingularKernelError):
        rc.pair_kernel(0.3, 0.3, UNIFORM, P40)
    with pytest.raises(InvalidInputError):
        rc.pair_weight(np.inf, 0.3, UNIFORM, P40)


@given(coord, coord)
def test_kernel_symmetry(x, y):
    if x == y:
        return
    for dens in (UNIFORM, NORMAL):
        assert rc.log_pair_kernel(x, y, dens, P40) == rc.log_pair_kernel(y, x, dens, P40)
        assert rc.pair_kernel(x, y, dens, P40) == rc.pair_kernel(y, x, dens, P40)


def test_kernel_symmetry_random_pairs(rng):
    for x, y in rng.uniform(-2, 2, size=(100, 2)):
        assert rc.pair_kernel(x, y, NORMAL, P40) == rc.pair_kernel(y, x, NORMAL, P40)


@given(coord, coord, st.floats(-2, 2), st.floats(0.1, 5))
def test_weight_and_kernel_positive(x, y, alpha, beta):
    if x == y:
        return
    p = rc.EnergyParams(alpha=alpha, beta=beta)
    assert rc.pair_weight(x, y, NORMAL, p) > 0
    assert rc.pair_kernel(x, y, NORMAL, p) > 0
    assert math.isfinite(rc.log_pair_kernel(x, y, NORMAL, p))


# -- energy -----------------------------------------------------------------


def test_total_energy_two_points():
    p = rc.EnergyParams(m=4, d=1)
    k = rc.pair_kernel(0.0, 1.0, UNIFORM, p)
    c = rc.Configuration([[0.0], [1.0]])
    assert rc.total_energy(c, UNIFORM, p) == pytest.approx(k ** 0.25, rel=1e-14)
    with pytest.raises(InsufficientPointsError):
        rc.total_energy(rc.Configuration([[0.0]]), UNIFORM, p)


def test_five_point_kernel_sum_matches_oracle():
    pts = [0.03, 0.21, 0.5, 0.74, 0.98]
    c = rc.Configuration(np.array(pts)[:, None])
    # log scale: the m = 40 sum is far outside double range
    oracle = mp_log_pair_sum(pts, UNIFORM, P40)
    assert rc.log_pair_sum(c, UNIFORM, P40) == pytest.approx(float(oracle), rel=1e-12)
    # value scale with a small exponent
    p = rc.EnergyParams(m=3, d=1)
    oracle = mp.exp(mp_log_pair_sum(pts, UNIFORM, p))
    assert math.exp(rc.log_pair_sum(c, UNIFORM, p)) == pytest.approx(float(oracle), rel=1e-10)


def test_ten_point_energy_matches_oracle(rng):
    pts = np.sort(rng.uniform(size=10))
    c = rc.Configuration(pts[:, None])
    oracle = mp_log_pair_sum(list(pts), UNIFORM, P40) / 40
    assert rc.log_total_energy(c, UNIFORM, P40) == pytest.approx(float(oracle), rel=1e-12)
    p = rc.EnergyParams(m=3, d=1)
    oracle = mp.exp(mp_log_pair_sum(list(pts), UNIFORM, p) / 3)
    assert rc.total_energy(c, UNIFORM, p) == pytest.approx(float(oracle), rel=1e-10)


@given(st.lists(st.floats(-3, 3), min_size=2, max_size=25, unique=True), st.randoms(use_true_random=False))
def test_energy_permutation_invariance_bit_exact(xs, rnd):
    perm = list(xs)
    rnd.shuffle(perm)
    a = rc.Configuration(np.array(xs)[:, None])
    b = rc.Configuration(np.array(perm)[:, None])
    for dens in (UNIFORM, NORMAL):
        assert rc.log_pair_sum(a, dens, P40) == rc.log_pair_sum(b, dens, P40)


def test_energy_permutation_invariance_2d(rng):
    pts = rng.uniform(size=(40, 2))
    a = rc.Configuration(pts)
    b = rc.Configuration(pts[rng.permutation(40)])
    p = rc.EnergyParams(m=6, d=2)
    assert rc.log_total_energy(a, UNIFORM, p) == rc.log_total_energy(b, UNIFORM, p)


# -- potential ----------------------------------------------------------------


def test_potential_single_source():
    p = rc.EnergyParams(m=2, d=1)
    c = rc.Configuration([[0.0]])
    val = rc.potential_at(0.5, c, UNIFORM, p)
    assert val / rc.pair_weight(0.0, 0.5, UNIFORM, p) == pytest.approx(0.5 ** -2, rel=1e-14)
    with pytest.raises(SingularKernelError):
        rc.potential_at(0.0, c, UNIFORM, p)


def test_potential_midpoint_vs_far_point():
    p = rc.EnergyParams(m=40, d=2)
    c = rc.Configuration([[0.0, 0.0], [1.0, 0.0]])
    cand = [[0.5, 0.0], [0.5, math.sqrt(0.75)]]
    near, far = (rc.log_potential_at(y, c, constant_gamma(0.0), p) for y in cand)
    assert near > far
    # clamped weights share the lead term; the ordering falls to the residual
    big, res = rc.potential_parts(cand, c, rc.uniform_density([-2, -2], [2, 2]), p)
    assert big[0] == big[1] and res[0] > res[1]


@given(st.floats(0.0, 1.0), st.floats(1e-3, 0.5), st.floats(1e-3, 0.5))
def test_potential_monotone_decay(x0, r1, r2):
    if r1 == r2:
        return
    c = rc.Configuration([[x0]])
    for dens in (constant_gamma(0.0), constant_gamma(0.7)):
        # compare (lead, residual) lexicographically: clamped leads tie in double precision
        big, res = rc.potential_parts([[x0 + r1], [x0 + r2]], c, dens, P40)
        a, b = (big[0], res[0]), (big[1], res[1])
        assert (a > b) == (r1 < r2)


def test_potential_argmin_on_grid_matches_oracle():
    pts = [0.05, 0.3, 0.45, 0.8, 0.92]
    c = rc.Configuration(np.array(pts)[:, None])
    grid = np.linspace(0, 1, 101)
    grid = grid[np.all(np.abs(grid[:, None] - np.array(pts)[None, :]) > 0, axis=1)]
    g = [mp.mpf(0)] * 5
    oracle = [mp_log_sum([mp_log_kernel(mp.mpf(y), mp.mpf(x), mp.mpf(0), gx, P40) for x, gx in zip(pts, g)]) for y in grid]
    k, score = rc.argmin_potential(grid[:, None], c, UNIFORM, P40)
    assert k == int(np.argmin([float(o) for o in oracle]))
    assert score == pytest.approx(float(oracle[k]), rel=1e-12)
    big, res = rc.potential_parts(grid[:, None], c, UNIFORM, P40)
    assert int(np.lexsort((res, big))[0]) == k


# -- geometry ----------------------------------------------------------------


def test_min_separation_examples(rng):
    assert rc.min_separation(rc.Configuration([[0.0], [0.5], [1.0]])) == 0.5
    for n in (2, 7, 50):
        assert rc.min_separation(rc.Configuration(np.linspace(0, 1, n)[:, None])) == pytest.approx(1 / (n - 1), rel=1e-12)
    pts = rng.uniform(size=(50, 2))
    brute = min(math.dist(pts[i], pts[j]) for i in range(50) for j in range(i + 1, 50))
    assert rc.min_separation(rc.Configuration(pts)) == pytest.approx(brute, rel=1e-12)
    with pytest.raises(InsufficientPointsError):
        rc.min_separation(rc.Configuration([[0.0]]))


def test_covering_radius_examples():
    mesh = np.linspace(0, 1, 1001)
    assert rc.covering_radius(rc.Configuration(mesh[:, None]), mesh) == 0.0
    assert rc.covering_radius(rc.Configuration([[0.0], [1.0]]), mesh) == pytest.approx(0.5)
    fine = np.linspace(0, 1, 100001)
    for n in (5, 20, 64):
        cr = rc.covering_radius(rc.Configuration(np.linspace(0, 1, n)[:, None]), fine)
        assert abs(cr - 1 / (2 * (n - 1))) <= 1e-5
    with pytest.raises(InvalidInputError):
        rc.covering_radius(rc.Configuration([[0.0]]), [])


def test_brute_force_equivalence_n100(rng):
    pts = np.sort(rng.uniform(size=100))
    c = rc.Configuration(pts[:, None])
    mp.mp.dps = 30
    try:
        oracle = mp_log_pair_sum(list(pts), NORMAL, P40)
        assert rc.log_pair_sum(c, NORMAL, P40) == pytest.approx(float(oracle), rel=1e-10)
        y = 0.123456
        g = [mp_gamma(NORMAL, x) for x in pts]
        gy = mp_gamma(NORMAL, y)
        pot = mp_log_sum([mp_log_kernel(mp.mpf(y), mp.mpf(x), gy, gx, P40) for x, gx in zip(pts, g)])
        assert rc.log_potential_at(y, c, NORMAL, P40) == pytest.approx(float(pot), rel=1e-10)
    finally:
        mp.mp.dps = 50
    mesh = np.linspace(-0.1, 1.1, 3001)
    brute = max(min(abs(m - x) for x in pts) for m in mesh)
    assert rc.covering_radius(c, mesh) == pytest.approx(brute, rel=1e-10)
    sep = min(abs(pts[i] - pts[j]) for i in range(100) for j in range(i + 1, 100))
    assert rc.min_separation(c) == pytest.approx(sep, rel=1e-10)


def test_covering_exponent():
    assert rc.covering_exponent(40, 1) == pytest.approx(-38 / 39)


def test_uniformity_statistic_examples(rng):
    s = rc.uniformity_statistic(rc.Configuration([[0.0], [1.0]]))
    assert s.mean == pytest.approx(1.0)
    assert s.raw == pytest.approx(1.0)
    u = rc.uniformity_statistic(rc.Configuration(rng.uniform(size=10000)[:, None]))
    assert abs(u.mean - 1 / 3) < 0.01
    e = rc.uniformity_statistic(rc.Configuration(np.linspace(0, 1, 2001)[:, None]))
    assert abs(e.mean - 1 / 3) < 1e-3
    pts = rng.uniform(size=(30, 2))
    c = rc.Configuration(pts)
    brute = sum(math.dist(a, b) for a in pts for b in pts) / 30
    assert rc.uniformity_statistic(c).raw == pytest.approx(brute, rel=1e-12)
    x = rng.uniform(size=40)
    brute = sum(abs(a - b) for a in x for b in x) / 40
    assert rc.uniformity_statistic(rc.Configuration(x[:, None])).raw == pytest.approx(brute, rel=1e-12)


def test_ks_examples():
    n = 50
    q = rc.Configuration(((np.arange(n) + 0.5) / n)[:, None])
    ks = rc.ks_uniformity_test(q, stats.uniform.cdf)
    assert ks.statistic <= 0.5 / n + 1e-15 and ks.passed
    lump = rc.Configuration((1e-12 * np.arange(1, 101))[:, None])
    ks = rc.ks_uniformity_test(lump, stats.uniform.cdf)
    assert ks.statistic > 0.99 and not ks.passed
    with pytest.raises(UnsupportedDimensionError):
        rc.ks_uniformity_test(rc.Configuration(np.eye(2) * 0.5), stats.uniform.cdf)
    two = rc.ks_uniformity_test(rc.Configuration(np.random.default_rng(1).uniform(size=(400, 2))), [stats.uniform.cdf] * 2)
    assert two.passed


def test_qq_slope_of_exact_quantiles():
    n = 40
    q = rc.Configuration(((np.arange(n) + 0.5) / n)[:, None])
    assert rc.qq_slope(q, stats.uniform.ppf) == pytest.approx(1.0, rel=1e-12)


def test_energy_lower_bound_on_random_sets(rng):
    for n in (2, 5, 30):
        c = rc.Configuration(rng.uniform(size=n)[:, None])
        assert rc.energy_lower_bound(c, UNIFORM, P40).holds
