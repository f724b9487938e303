"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the verdicts are repeated
in an "acceptance criteria" section at the end of the pytest report.
"""

import json
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from riesz_smc import chebyshev_gen as cg
from riesz_smc import experiments as ex
from riesz_smc import hmm_models as hm
from riesz_smc import riesz_core as rc
from riesz_smc import smc_filter as sf
from riesz_smc.io import read_csv

ROOT = Path(__file__).resolve().parents[1]
BASE = hm.LgssParams(0.75, 1.0, 0.1)

pytestmark = pytest.mark.acceptance


@pytest.fixture(autouse=True)
def sequential(monkeypatch):
    monkeypatch.setenv("RIESZ_SMC_THREADS", "0")


def monotone_ok(values, slack):
    ups = [b - a for a, b in zip(values, values[1:]) if b > a]
    return len(ups) <= 1 and all(u <= slack for u in ups)


def test_1_uniformity(tmp_path, verdict):
    t0 = time.perf_counter()
    ex.run(ex.build_config(None, "qq-uniformity", out_dir=tmp_path))
    elapsed = time.perf_counter() - t0
    rep = json.loads((tmp_path / "uniformity.json").read_text())["by_seed"]["0"]
    parts = [f"n={n} KS={r['ks_statistic']:.4f}/{r['ks_critical']:.4f} slope={r['qq_slope']:.3f}" for n, r in rep.items()]
    ok = all(r["ks_pass"] and 0.9 <= r["qq_slope"] <= 1.1 for r in rep.values()) and elapsed < 10
    verdict(1, ok, "; ".join(parts) + f"; {elapsed:.1f}s")
    assert ok


def test_2_table1_trend(tmp_path, verdict):
    t0 = time.perf_counter()
    ex.run(ex.build_config(None, "lgss-filter-table", out_dir=tmp_path))
    elapsed = time.perf_counter() - t0
    _, rows = read_csv(tmp_path / "table1.csv")
    lm = [r[3] for r in rows]
    n1000 = rows[-1][3]
    ok = (monotone_ok(lm, 0.3) and abs(n1000 - (-11.48)) <= 1.5 and elapsed < 300
          and all(r[5] == 10 for r in rows))
    verdict(2, ok, f"log-MSE by N {dict(zip((int(r[0]) for r in rows), [round(float(v), 2) for v in lm]))}; N=1000 {n1000:.2f} vs -11.48; {elapsed:.0f}s")
    assert ok


def test_3_table2_pmh(tmp_path, verdict):
    raw = {"pmh": {"particle_counts": [50, 100, 200, 500], "step_size_grid": [0.1]}}
    t0 = time.perf_counter()
    ex.run(ex.build_config(raw, "lgss-pmh", out_dir=tmp_path))
    elapsed = time.perf_counter() - t0
    _, rows = read_csv(tmp_path / "table2.csv")
    means = {int(r[0]): r[1] for r in rows}
    var = {int(r[0]): r[2] for r in rows}
    ratio = var[50] / var[500]
    mean_ok = all(abs(m - 0.70) <= 0.10 for m in means.values())
    ok = mean_ok and ratio >= 5 and elapsed < 900
    verdict(3, ok, f"means {[round(m, 3) for m in means.values()]} (in 0.70+-0.10: {mean_ok}); "
                   f"variances {[f'{v:.5f}' for v in var.values()]}; var(50)/var(500) = {ratio:.2f} (need >= 5); {elapsed:.0f}s")
    assert ok


def test_4_likelihood_oracle(verdict):
    _, y50 = hm.lgss_simulate(50, BASE, seed=0)
    model = hm.LgssModel(BASE)
    exact50 = hm.kalman_loglik(y50, BASE)
    ratios = np.array([math.exp(sf.filter_run(model, y50, sf.FilterConfig(500, "optimal", seed=s)).loglik - exact50)
                       for s in range(50)])
    rse = ratios.std(ddof=1) / math.sqrt(ratios.size)
    z = abs(ratios.mean() - 1) / rse
    _, y250 = hm.lgss_simulate(250, BASE, seed=0)
    exact250 = hm.kalman_loglik(y250, BASE)
    gaps = [abs(sf.filter_run(model, y250, sf.FilterConfig(1000, "optimal", seed=s)).loglik - exact250) for s in range(10)]
    ok = z < 3 and max(gaps) < 2
    verdict(4, ok, f"mean p_hat/p = {ratios.mean():.4f} ({z:.2f} rse from 1); max |dlog| at N=1000, T=250: {max(gaps):.3f}")
    assert ok


@pytest.fixture(scope="module")
def run400():
    return cg.generate(rc.uniform_density(0.0, 1.0), rc.EnergyParams(), cg.GeneratorConfig(n_points=400, seed=0))


def test_5_covering_scaling(run400, verdict):
    t0 = time.perf_counter()
    ns = [25, 50, 100, 200, 400]
    mesh = np.linspace(0.0, 1.0, 20001)
    cr = [rc.covering_radius(run400.config.prefix(n), mesh) for n in ns]
    slope = float(np.polyfit(np.log(ns), np.log(cr), 1)[0])
    elapsed = time.perf_counter() - t0
    ok = -1.15 <= slope <= -0.75 and elapsed < 60
    verdict(5, ok, f"log-log slope {slope:.3f} (range [-1.15, -0.75])")
    assert ok


def test_6_energy_lower_bound(run400, verdict):
    density, p = rc.uniform_density(0.0, 1.0), rc.EnergyParams()
    configs = [run400.config.prefix(n) for n in range(10, 201)]
    # independently generated sets as well as the nested prefixes
    for seed in (1, 2):
        res = cg.generate(density, p, cg.GeneratorConfig(n_points=200, seed=seed))
        configs += [res.config.prefix(n) for n in range(10, 201, 10)]
    checks = [rc.energy_lower_bound(c, density, p) for c in configs]
    bad = sum(not c.holds for c in checks)
    margin = min(c.log_lhs - c.log_rhs for c in checks)
    verdict(6, bad == 0, f"{len(checks)} configurations, {bad} violations, smallest log margin {margin:.3g}")
    assert bad == 0


PROPERTY_TESTS = [
    "tests/test_riesz_core.py::test_kernel_symmetry",
    "tests/test_riesz_core.py::test_kernel_symmetry_random_pairs",
    "tests/test_riesz_core.py::test_energy_permutation_invariance_bit_exact",
    "tests/test_riesz_core.py::test_energy_permutation_invariance_2d",
    "tests/test_smc_filter.py::test_system_invariants",
    "tests/test_smc_filter.py::test_exchangeability",
    "tests/test_pmh_infer.py::test_rejection_copies_state_and_support",
    "tests/test_smc_filter.py::test_determinism_bit_identical",
    "tests/test_pmh_infer.py::test_chain_determinism",
    "tests/test_chebyshev_gen.py::test_generate_determinism_and_prefix",
    "tests/test_riesz_core.py::test_brute_force_equivalence_n100",
    "tests/test_riesz_core.py::test_ten_point_energy_matches_oracle",
    "tests/test_chebyshev_gen.py::test_next_point_matches_exhaustive_grid_oracle",
]


def test_7_property_suites(verdict):
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *PROPERTY_TESTS],
                          cwd=ROOT, capture_output=True, text=True, timeout=1200)
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    ok = proc.returncode == 0
    verdict(7, ok, f"{len(PROPERTY_TESTS)} property tests: {tail}")
    assert ok, proc.stdout[-3000:]


def test_8_sv_real_data(tmp_path, verdict):
    data = ROOT / "data" / "synthetic_prices.csv"
    n_prices = len(data.read_text().strip().splitlines()) - 1
    t0 = time.perf_counter()
    ex.run(ex.build_config({"data_path": str(data)}, "sv-real-data", out_dir=tmp_path))
    elapsed = time.perf_counter() - t0
    _, rows = read_csv(tmp_path / "volatility.csv")
    v = np.array(rows)
    width = v[:, 4] - v[:, 3]
    finite = bool(np.all(np.isfinite(v)) and np.all(width > 0))
    summ = json.loads((tmp_path / "sv_summary.json").read_text())
    rho = summ["posterior_mean"][summ["param_names"].index("persistence")]
    ok = n_prices == 252 and len(rows) == 251 and finite and rho > 0.5 and elapsed < 1200
    verdict(8, ok, f"{n_prices} prices, bands finite/positive: {finite}, persistence mean {rho:.3f}, "
                   f"acceptance {summ['acceptance_rate']:.2f}; {elapsed:.0f}s")
    assert ok
