"""Experiment registry: config parsing and the five reproducible experiment drivers.

Each driver takes an :class:`ExperimentConfig` and writes its outputs under
``cfg.out_dir``.  Every file is written atomically and numbers are serialized
with 17 significant digits, so reruns with the same config are byte-identical.
"""

from __future__ import annotations

import copy
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import stats

from . import chebyshev_gen as cg
from . import hmm_models as hm
from . import pmh_infer as pmh
from . import riesz_core as rc
from . import smc_filter as sf
from .errors import ConfigError, FilterDegeneracyError
from .io import write_csv, write_json

log = logging.getLogger(__name__)

EXPERIMENTS = ("qq-uniformity", "lgss-filter-table", "lgss-pmh", "sv-real-data", "cheb-generate")

_LGSS_MODEL = {"phi": 0.75, "sigma_v": 1.0, "sigma_o": 0.1}
_GENERATOR = {"pool_size": 512, "max_retries": 32, "seed": 0}

DEFAULTS: dict[str, dict] = {
    "qq-uniformity": {
        "generator": dict(_GENERATOR),
        "options": {"sizes": [40, 120, 200]},
        "seeds": [0],
    },
    "lgss-filter-table": {
        "generator": dict(_GENERATOR),
        "model": dict(_LGSS_MODEL),
        "filter": {
            "particle_counts": [10, 20, 50, 100, 200, 500, 1000],
            "proposal_mode": "chebyshev",
            "n_cheb": 200,
        },
        "options": {"T": 250, "reference": "kalman"},
        "seeds": list(range(10)),
    },
    "lgss-pmh": {
        "generator": dict(_GENERATOR),
        "model": dict(_LGSS_MODEL),
        "filter": {"proposal_mode": "chebyshev", "n_cheb": 100},
        "pmh": {
            "iterations": 5000,
            "burn_in": 1000,
            "init_params": [0.5],
            "step_size": 0.1,
            "particle_counts": [10, 20, 50, 100, 200, 500],
            "step_size_grid": [0.05, 0.1, 0.5],
            "acf_particles": 100,
            "max_lag": 50,
        },
        "options": {"T": 250, "data_seed": 0},
        "seeds": [0],
    },
    "sv-real-data": {
        "generator": dict(_GENERATOR),
        "model": {"mu": 0.0, "persistence": 0.95, "sigma_v": 0.2, "tau": 1.0},
        "filter": {"n_particles": 200, "proposal_mode": "chebyshev", "n_cheb": 200},
        "pmh": {
            "iterations": 5000,
            "burn_in": 1000,
            "init_params": [0.0, 0.95, 0.2],
            "step_sizes": [0.1, 0.01, 0.02],
            "max_lag": 50,
        },
        "options": {"start": "2015-01-02", "end": "2016-01-02", "return_scale": 100.0, "band_level": 0.95},
        "seeds": [0],
    },
    "cheb-generate": {
        "generator": dict(_GENERATOR, n_points=200),
        "options": {"density": {"kind": "uniform", "lo": 0.0, "hi": 1.0}, "mesh_size": 20001},
        "seeds": [0],
    },
}

_TOP_KEYS = {"experiment", "energy", "generator", "filter", "pmh", "model", "options", "data_path", "out_dir", "seeds"}
_FILTER_KEYS = {"particle_counts", "n_particles", "proposal_mode", "n_cheb", "adaptive_resampling", "ess_threshold"}
_PMH_KEYS = {"iterations", "burn_in", "init_params", "step_size", "step_sizes", "particle_counts",
             "step_size_grid", "acf_particles", "max_lag"}
_OPTION_KEYS = {
    "qq-uniformity": {"sizes"},
    "lgss-filter-table": {"T", "reference"},
    "lgss-pmh": {"T", "data_seed"},
    "sv-real-data": {"start", "end", "return_scale", "band_level"},
    "cheb-generate": {"density", "mesh_size"},
}


@dataclass
class ExperimentConfig:
    experiment: str
    energy: rc.EnergyParams = field(default_factory=rc.EnergyParams)
    generator: dict = field(default_factory=dict)
    filter: dict = field(default_factory=dict)
    pmh: dict = field(default_factory=dict)
    model_params: object = None
    options: dict = field(default_factory=dict)
    data_path: str | None = None
    out_dir: str = "out"
    seeds: list = field(default_factory=lambda: [0])

    def to_dict(self) -> dict:
        d = {
            "experiment": self.experiment,
            "energy": asdict(self.energy),
            "generator": self.generator,
            "filter": self.filter,
            "pmh": self.pmh,
            "options": self.options,
            "data_path": self.data_path,
            "out_dir": str(self.out_dir),
            "seeds": list(self.seeds),
        }
        if self.model_params is not None:
            d["model"] = asdict(self.model_params)
        return d


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _check_keys(section: str, given: dict, allowed: set) -> None:
    if not isinstance(given, dict):
        raise ConfigError(f"section {section!r} must be an object")
    extra = sorted(set(given) - allowed)
    if extra:
        raise ConfigError(f"unknown keys in {section!r}: {extra}")


def _positive_ints(name, values, minimum=1):
    if not isinstance(values, list) or not values:
        raise ConfigError(f"{name} must be a non-empty list")
    for v in values:
        if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
            raise ConfigError(f"{name} entries must be integers >= {minimum}, got {v!r}")
    return values


def build_config(raw: dict | None, experiment: str | None = None, out_dir=None, seeds=None) -> ExperimentConfig:
    """Merge ``raw`` over the experiment defaults and validate the result.

    ``experiment``, ``out_dir`` and ``seeds`` override the corresponding file values.
    """
    raw = dict(raw or {})
    exp = experiment or raw.get("experiment")
    if raw.get("experiment") not in (None, exp):
        raise ConfigError(f"config is for {raw['experiment']!r}, not {exp!r}")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {exp!r}; choose from {EXPERIMENTS}")
    _check_keys("config", raw, _TOP_KEYS)
    merged = _merge(DEFAULTS[exp], raw)
    if out_dir is not None:
        merged["out_dir"] = str(out_dir)
    if seeds is not None:
        merged["seeds"] = list(seeds)

    try:
        energy = rc.EnergyParams(**merged.get("energy", {}))
    except TypeError as exc:
        raise ConfigError(f"energy: {exc}") from None
    if energy.d != 1 and exp in ("qq-uniformity", "lgss-filter-table", "lgss-pmh", "sv-real-data"):
        raise ConfigError(f"{exp} needs energy.d = 1")

    gen = merged.get("generator", {})
    try:
        cg.GeneratorConfig(**dict({"n_points": 2}, **gen))
    except TypeError as exc:
        raise ConfigError(f"generator: {exc}") from None

    filt = merged.get("filter", {})
    _check_keys("filter", filt, _FILTER_KEYS)
    if filt:
        if filt.get("proposal_mode", "chebyshev") not in sf.MODES:
            raise ConfigError(f"filter.proposal_mode must be one of {sf.MODES}")
        if "n_cheb" in filt:
            _positive_ints("filter.n_cheb", [filt["n_cheb"]], 2)
        if "particle_counts" in filt:
            _positive_ints("filter.particle_counts", filt["particle_counts"], 2)
        if "n_particles" in filt:
            _positive_ints("filter.n_particles", [filt["n_particles"]], 2)

    pm = merged.get("pmh", {})
    _check_keys("pmh", pm, _PMH_KEYS)
    if pm:
        _positive_ints("pmh.iterations", [pm["iterations"]], 2)
        burn = pm.get("burn_in")
        if burn is not None and not (isinstance(burn, int) and 0 <= burn < pm["iterations"] - 1):
            raise ConfigError("pmh.burn_in must satisfy 0 <= burn_in < iterations - 1")
        steps = [pm["step_size"]] if "step_size" in pm else list(pm.get("step_sizes", []))
        steps += list(pm.get("step_size_grid", []))
        if not all(isinstance(h, (int, float)) and h > 0 for h in steps):
            raise ConfigError("pmh step sizes must be positive numbers")
        if "particle_counts" in pm:
            _positive_ints("pmh.particle_counts", pm["particle_counts"], 2)

    model_params = None
    if "model" in merged:
        cls = hm.SvParams if exp == "sv-real-data" else hm.LgssParams
        try:
            model_params = cls(**merged["model"])
        except TypeError as exc:
            raise ConfigError(f"model: {exc}") from None
        if exp == "sv-real-data" and len(pm.get("init_params", [])) != 3:
            raise ConfigError("pmh.init_params must list (mu, persistence, sigma_v)")
        if exp == "sv-real-data" and len(pm.get("step_sizes", [])) != 3:
            raise ConfigError("pmh.step_sizes must have three entries")

    opts = merged.get("options", {})
    _check_keys("options", opts, _OPTION_KEYS[exp])
    if "T" in opts:
        _positive_ints("options.T", [opts["T"]])
    if exp == "qq-uniformity":
        _positive_ints("options.sizes", opts["sizes"], 2)
    if exp == "lgss-filter-table" and opts["reference"] not in ("kalman", "truth"):
        raise ConfigError("options.reference must be 'kalman' or 'truth'")
    if exp == "sv-real-data":
        if not merged.get("data_path"):
            raise ConfigError("sv-real-data needs data_path")
        if not (0 < opts["band_level"] < 1) or not opts["return_scale"] > 0:
            raise ConfigError("band_level must be in (0, 1) and return_scale positive")
    if exp == "cheb-generate":
        _density_from(opts["density"], energy.d)
        _positive_ints("options.mesh_size", [opts["mesh_size"]], 2)
    data_path = merged.get("data_path")
    if data_path is not None and not Path(data_path).is_file():
        raise ConfigError(f"data_path {data_path!r} does not exist")

    seeds = _positive_ints("seeds", merged.get("seeds"), 0)
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds must be distinct")

    return ExperimentConfig(
        experiment=exp, energy=energy, generator=gen, filter=filt, pmh=pm, model_params=model_params,
        options=opts, data_path=data_path, out_dir=merged.get("out_dir", "out"), seeds=seeds,
    )


def load_config(path, **overrides) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a JSON object")
    return build_config(raw, **overrides)


# ---------------------------------------------------------------- helpers


def derive_seed(*keys) -> int:
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1, np.uint64)[0])


def worker_count(n_tasks: int) -> int:
    """Workers allowed by ``RIESZ_SMC_THREADS`` (0 = run in-process); defaults to the CPU count."""
    env = os.environ.get("RIESZ_SMC_THREADS")
    if env is None or env.strip() == "":
        cap = os.cpu_count() or 1
    else:
        try:
            cap = int(env)
        except ValueError:
            raise ConfigError(f"RIESZ_SMC_THREADS must be an integer, got {env!r}") from None
        if cap < 0:
            raise ConfigError("RIESZ_SMC_THREADS must be non-negative")
    workers = min(cap, n_tasks)
    return 0 if workers <= 1 else workers


def _map(fn: Callable, tasks: list) -> list:
    workers = worker_count(len(tasks))
    if workers == 0:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks))


def _generator_config(cfg: ExperimentConfig, n_points: int, seed: int | None = None) -> cg.GeneratorConfig:
    g = dict(cfg.generator)
    g["n_points"] = n_points
    if seed is not None:
        g["seed"] = seed
    return cg.GeneratorConfig(**g)


def _cheb_set(cfg: ExperimentConfig) -> np.ndarray:
    g = _generator_config(cfg, cfg.filter["n_cheb"])
    res = cg.generate(rc.uniform_density(0.0, 1.0), cfg.energy, g)
    return cg.normal_scores(res.config)


def _density_from(spec: dict, d: int) -> rc.DensityOracle:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("density must be an object with a 'kind'")
    args = {k: v for k, v in spec.items() if k != "kind"}
    makers = {"uniform": rc.uniform_density, "gaussian": rc.gaussian_density, "exponential": rc.exponential_density}
    if spec["kind"] not in makers:
        raise ConfigError(f"density kind must be one of {sorted(makers)}")
    if d != 1:
        raise ConfigError("built-in densities are one-dimensional")
    try:
        return makers[spec["kind"]](**args)
    except TypeError as exc:
        raise ConfigError(f"density: {exc}") from None


def _fmt_h(h: float) -> str:
    return f"{h:g}"


def _out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "config_used.json", cfg.to_dict())
    return out


def _mean_sd(values):
    v = np.asarray([x for x in values if math.isfinite(x)], dtype=float)
    if v.size == 0:
        return math.nan, math.nan
    return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0


# ---------------------------------------------------------------- qq-uniformity


def run_qq_uniformity(cfg: ExperimentConfig) -> list[Path]:
    out = _out(cfg)
    sizes = sorted(cfg.options["sizes"])
    density = rc.uniform_density(0.0, 1.0)
    files, report = [], {"sizes": sizes, "ks_level": 0.05, "by_seed": {}}
    for s_idx, seed in enumerate(cfg.seeds):
        # shorter runs are exact prefixes of longer ones, so one run serves every size
        res = cg.generate(density, cfg.energy, _generator_config(cfg, sizes[-1], seed))
        per = {}
        for n in sizes:
            conf = res.config.prefix(n)
            ks = rc.ks_uniformity_test(conf, stats.uniform.cdf)
            slope = rc.qq_slope(conf, stats.uniform.ppf)
            uni = rc.uniformity_statistic(conf)
            per[str(n)] = {
                "ks_statistic": ks.statistic,
                "ks_critical": rc.KS_C05 / math.sqrt(n),
                "ks_pass": bool(ks.passed),
                "qq_slope": slope,
                "mean_pairwise_distance": uni.mean,
                "min_separation": rc.min_separation(conf),
            }
            if s_idx == 0:
                theo = (np.arange(n) + 0.5) / n
                path = out / f"qq_{n}.csv"
                write_csv(path, ["theoretical_quantile", "sample_quantile"], zip(theo, np.sort(conf.points[:, 0])))
                files.append(path)
        report["by_seed"][str(seed)] = per
    write_json(out / "uniformity.json", report)
    return files + [out / "uniformity.json"]


# ---------------------------------------------------------------- lgss-filter-table


def _table_cell(task):
    model, y, ref, N, fcfg_kwargs, seed = task
    try:
        res = sf.filter_run(model, y, sf.FilterConfig(N, seed=derive_seed(seed, N), **fcfg_kwargs))
    except FilterDegeneracyError as exc:
        return {"status": "invalid", "error": str(exc)}
    lb, lm = sf.filtering_metrics(res.state_means, ref)
    return {"status": "ok", "log_bias": lb, "log_mse": lm, "loglik": res.loglik}


def run_lgss_filter_table(cfg: ExperimentConfig) -> list[Path]:
    out = _out(cfg)
    T, p = cfg.options["T"], cfg.model_params
    counts = cfg.filter["particle_counts"]
    mode = cfg.filter.get("proposal_mode", "chebyshev")
    fkw = {
        "proposal_mode": mode,
        "cheb_set": _cheb_set(cfg) if mode == "chebyshev" else None,
        "adaptive_resampling": cfg.filter.get("adaptive_resampling", False),
        "ess_threshold": cfg.filter.get("ess_threshold", 0.5),
    }
    model = hm.LgssModel(p)
    tasks = []
    for seed in cfg.seeds:
        x, y = hm.lgss_simulate(T, p, seed=seed)
        ref = hm.kalman_filter(y, p)[0] if cfg.options["reference"] == "kalman" else x
        tasks += [(model, y, ref, N, fkw, seed) for N in counts]
    results = _map(_table_cell, tasks)

    cells, rows = [], []
    for (_, _, _, N, _, seed), r in zip(tasks, results):
        cells.append((seed, N, r["status"], r.get("log_bias", math.nan), r.get("log_mse", math.nan), r.get("loglik", math.nan)))
    for N in counts:
        ok = [c for c in cells if c[1] == N and c[2] == "ok"]
        lb = _mean_sd(c[3] for c in ok)
        lm = _mean_sd(c[4] for c in ok)
        rows.append((N, lb[0], lb[1], lm[0], lm[1], len(ok)))
    write_csv(out / "table1.csv", ["N", "log_bias_mean", "log_bias_sd", "log_mse_mean", "log_mse_sd", "n_valid"], rows)
    write_csv(out / "table1_cells.csv", ["seed", "N", "status", "log_bias", "log_mse", "loglik"], cells)
    return [out / "table1.csv", out / "table1_cells.csv"]


# ---------------------------------------------------------------- lgss-pmh


def _pmh_run(task):
    model, y, pcfg, path_stem, max_lag = task
    try:
        trace = pmh.run_chain(model, y, pcfg)
    except Exception as exc:  # noqa: BLE001 - one failed run must not stop the grid
        log.error("%s failed: %s", path_stem, exc)
        return {"status": "failed", "error": f"{type(exc).__name__}: {exc}"}
    pmh.write_trace_csv(f"{path_stem}.csv", trace)
    summ = pmh.write_summary_json(f"{path_stem}_summary.json", trace, pcfg.burn_in_, max_lag)
    return {"status": "ok", "summary": summ, "failures": list(trace.failures)}


def run_lgss_pmh(cfg: ExperimentConfig) -> list[Path]:
    out = _out(cfg)
    p, pm = cfg.model_params, cfg.pmh
    _, y = hm.lgss_simulate(cfg.options["T"], p, seed=cfg.options["data_seed"])
    write_csv(out / "data.csv", ["t", "y"], [(t + 1, v) for t, v in enumerate(y)])
    mode = cfg.filter.get("proposal_mode", "chebyshev")
    cheb = _cheb_set(cfg) if mode == "chebyshev" else None
    model = hm.LgssModel(p)
    h0, grid, n_acf = pm["step_size"], pm["step_size_grid"], pm["acf_particles"]

    keys = [(N, h0) for N in pm["particle_counts"]] + [(n_acf, h) for h in grid]
    keys = list(dict.fromkeys(keys))
    tasks, index = [], []
    for seed in cfg.seeds:
        for N, h in keys:
            fcfg = sf.FilterConfig(N, mode, cheb, adaptive_resampling=cfg.filter.get("adaptive_resampling", False),
                                   ess_threshold=cfg.filter.get("ess_threshold", 0.5))
            pcfg = pmh.PmhConfig(pm["iterations"], [h], fcfg, pm["init_params"], seed=seed, burn_in=pm.get("burn_in"))
            stem = out / f"trace_N{N}_h{_fmt_h(h)}_seed{seed}"
            tasks.append((model, y, pcfg, str(stem), pm["max_lag"]))
            index.append((seed, N, h))
    results = _map(_pmh_run, tasks)
    by_key = {k: r for k, r in zip(index, results)}

    rows = []
    for N in pm["particle_counts"]:
        ok = [by_key[(s, N, h0)]["summary"] for s in cfg.seeds if by_key[(s, N, h0)]["status"] == "ok"]
        rows.append((
            N,
            _mean_sd(o["posterior_mean"][0] for o in ok)[0],
            _mean_sd(o["posterior_variance"][0] for o in ok)[0],
            _mean_sd(o["acceptance_rate"] for o in ok)[0],
            len(ok),
        ))
    write_csv(out / "table2.csv", ["N", "posterior_mean", "posterior_variance", "acceptance_rate", "n_valid"], rows)
    files = [out / "table2.csv"]
    for h in grid:
        ok = [by_key[(s, n_acf, h)]["summary"]["acf"] for s in cfg.seeds if by_key[(s, n_acf, h)]["status"] == "ok"]
        lags = sorted({int(l) for a in ok for l in a})
        acf_rows = [(l, _mean_sd(a[str(l)] for a in ok if str(l) in a)[0]) for l in lags]
        path = out / f"acf_h{_fmt_h(h)}.csv"
        write_csv(path, ["lag", "acf"], acf_rows)
        files.append(path)
    status = [{"seed": s, "N": N, "h": h, "status": r["status"], **({"error": r["error"]} if "error" in r else {}),
               "filter_failures": r.get("failures", [])} for (s, N, h), r in by_key.items()]
    write_json(out / "runs.json", status)
    return files + [out / "runs.json"]


# ---------------------------------------------------------------- sv-real-data


def weighted_quantile(values, weights, q: float) -> float:
    """Smallest value whose cumulative normalized weight reaches ``q``."""
    order = np.argsort(values, kind="stable")
    cw = np.cumsum(np.asarray(weights, float)[order])
    cw /= cw[-1]
    k = int(np.searchsorted(cw, q, side="left"))
    return float(np.asarray(values)[order][min(k, cw.size - 1)])


def volatility_bands(result: sf.FilterResult, level: float = 0.95):
    """Weighted filtering mean and central ``level`` interval of the log-volatility at each t."""
    sysm = result.system
    lo_q, hi_q = (1 - level) / 2, 1 - (1 - level) / 2
    means = np.einsum("tn,tn->t", sysm.weights, sysm.particles)
    lo = np.array([weighted_quantile(x, w, lo_q) for x, w in zip(sysm.particles, sysm.weights)])
    hi = np.array([weighted_quantile(x, w, hi_q) for x, w in zip(sysm.particles, sysm.weights)])
    return means, lo, hi


def run_sv_real_data(cfg: ExperimentConfig) -> list[Path]:
    out = _out(cfg)
    opts, pm = cfg.options, cfg.pmh
    _, closes = hm.read_price_csv(cfg.data_path, opts["start"], opts["end"])
    if closes.size < 3:
        raise ConfigError("fewer than three prices inside the date window")
    y = opts["return_scale"] * hm.log_returns(closes)
    mode = cfg.filter.get("proposal_mode", "chebyshev")
    cheb = _cheb_set(cfg) if mode == "chebyshev" else None
    fcfg = sf.FilterConfig(cfg.filter["n_particles"], mode, cheb,
                           adaptive_resampling=cfg.filter.get("adaptive_resampling", False),
                           ess_threshold=cfg.filter.get("ess_threshold", 0.5))
    model = hm.SvModel(cfg.model_params)
    tasks = []
    for seed in cfg.seeds:
        pcfg = pmh.PmhConfig(pm["iterations"], pm["step_sizes"], fcfg, pm["init_params"], seed=seed, burn_in=pm.get("burn_in"))
        tasks.append((model, y, pcfg, str(out / f"sv_trace_seed{seed}"), pm["max_lag"]))
    results = _map(_pmh_run, tasks)

    files = []
    ok = [r["summary"] for r in results if r["status"] == "ok"]
    names = list(model.param_names)
    if ok:
        post_mean = np.mean([o["posterior_mean"] for o in ok], axis=0)
        fit = model.with_theta(post_mean)
        res = sf.filter_run(fit, y, fcfg.with_seed(derive_seed(cfg.seeds[0], 0xB0)))
        mean, lo, hi = volatility_bands(res, opts["band_level"])
        write_csv(out / "volatility.csv", ["t", "y", "logvol_mean", "logvol_lo", "logvol_hi"],
                  [(t + 1, y[t], mean[t], lo[t], hi[t]) for t in range(y.size)])
        files.append(out / "volatility.csv")
        for j, name in enumerate(names):
            acfs = [o["acf_by_param"][name] for o in ok]
            lags = sorted({int(l) for a in acfs for l in a})
            path = out / f"acf_{name}.csv"
            write_csv(path, ["lag", "acf"], [(l, _mean_sd(a[str(l)] for a in acfs if str(l) in a)[0]) for l in lags])
            files.append(path)
        summary = {
            "param_names": names,
            "posterior_mean": post_mean.tolist(),
            "posterior_variance": np.mean([o["posterior_variance"] for o in ok], axis=0).tolist(),
            "acceptance_rate": float(np.mean([o["acceptance_rate"] for o in ok])),
            "n_returns": int(y.size),
            "return_scale": opts["return_scale"],
        }
    else:
        summary = {"param_names": names, "error": "every chain failed"}
    summary["runs"] = [{"seed": s, "status": r["status"], **({"error": r["error"]} if "error" in r else {})}
                       for s, r in zip(cfg.seeds, results)]
    write_json(out / "sv_summary.json", summary)
    return files + [out / "sv_summary.json"]


# ---------------------------------------------------------------- cheb-generate


def run_cheb_generate(cfg: ExperimentConfig) -> list[Path]:
    out = _out(cfg)
    density = _density_from(cfg.options["density"], cfg.energy.d)
    files, diags = [], {}
    for seed in cfg.seeds:
        gcfg = _generator_config(cfg, cfg.generator.get("n_points", 200), seed)
        res = cg.generate(density, cfg.energy, gcfg)
        conf = res.config
        path = out / f"configuration_seed{seed}.csv"
        cg.write_configuration_csv(path, res)
        files.append(path)
        mesh = np.linspace(gcfg.lo[0], gcfg.hi[0], cfg.options["mesh_size"])
        ks = None
        cdf = _target_cdf(cfg.options["density"])
        if cdf is not None:
            ks = rc.ks_uniformity_test(conf, cdf)
        diags[str(seed)] = {
            "n_points": conf.n,
            "min_separation": rc.min_separation(conf),
            "covering_radius": rc.covering_radius(conf, mesh),
            "mesh": {"lo": float(gcfg.lo[0]), "hi": float(gcfg.hi[0]), "size": cfg.options["mesh_size"]},
            "log_energy": rc.log_total_energy(conf, density, cfg.energy),
            "ks_statistic": None if ks is None else ks.statistic,
            "ks_pass": None if ks is None else bool(ks.passed),
            "forced_acceptances": int(sum(res.forced)),
        }
    write_json(out / "diagnostics.json", diags)
    return files + [out / "diagnostics.json"]


def _target_cdf(spec: dict):
    kind = spec["kind"]
    if kind == "uniform":
        lo, hi = spec.get("lo", 0.0), spec.get("hi", 1.0)
        return stats.uniform(lo, hi - lo).cdf
    if kind == "gaussian":
        mean, sd = spec.get("mean", 0.0), spec.get("sd", 1.0)
        lo, hi = spec.get("lo"), spec.get("hi")
        a = -np.inf if lo is None else (lo - mean) / sd
        b = np.inf if hi is None else (hi - mean) / sd
        return stats.truncnorm(a, b, loc=mean, scale=sd).cdf
    if kind == "exponential":
        rate, hi = spec.get("rate", 1.0), spec.get("hi")
        if hi is None:
            return stats.expon(scale=1 / rate).cdf
        base = stats.expon(scale=1 / rate)
        return lambda x: base.cdf(x) / base.cdf(hi)
    return None


RUNNERS: dict[str, Callable[[ExperimentConfig], list]] = {
    "qq-uniformity": run_qq_uniformity,
    "lgss-filter-table": run_lgss_filter_table,
    "lgss-pmh": run_lgss_pmh,
    "sv-real-data": run_sv_real_data,
    "cheb-generate": run_cheb_generate,
}


def run(cfg: ExperimentConfig) -> list[Path]:
    return RUNNERS[cfg.experiment](cfg)
