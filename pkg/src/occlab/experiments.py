"""Registry of named experiments.

Each runner takes a validated flat config and a thread count and returns an
:class:`ExperimentResult` (verdicts, plot-ready tables, extra info). Runners
are pure functions of the config, so tables are reproducible byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats
from scipy.spatial import cKDTree

from .cover import build_cover
from .errors import ConfigurationError, UnreliableInputError
from .occupation import occupation_measure
from .paths import DiscreteAngleLaw, TimeGrid, simulate_bm
from .quadrants import (min_law_exact, min_law_mc_verdicts, reflection_symmetry_verdict, scan_from_summary,
                        simulate_quadrant_summaries, trial_from_summary, monotone_trend_verdict)
from .recovery import (oracle_endpoint, phi_on_range, recover_endpoint, thick_profile)
from .rng import RngStreamSpec, parallel_map
from .sampling_laws import (BMSignSampler, ConverseSampler, DirichletSectorSampler, PointMass, TestVerdict,
                            WalshSectorSampler, binned_diagonal_verdict, collect, converse_example_stats,
                            converse_tuples, endpoint_surface_f, exchangeability_chi_square,
                            levy_beta_conditionals, petit_law_check, power_weight_cdf,
                            power_weight_identity_check, stationary_weight_discrepancy, uniform_half_cdf,
                            upper_verdict, walsh_tuples)
from .topology import (PointCloud, brute_components, component_forest, cut_set_A_delta, cut_times_oracle,
                       delta_cutpoints, hausdorff_distance, lattice_for, oracle_cutpoints, point_diameter)


@dataclass
class ExperimentResult:
    verdicts: dict
    tables: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        s = [v.status for v in self.verdicts.values()]
        if "fail" in s:
            return "fail"
        if "inconclusive" in s or not s:
            return "inconclusive"
        return "pass"


@dataclass(frozen=True)
class Experiment:
    name: str
    anchor: str
    defaults: dict
    runner: Callable
    check: Callable | None = None

    def config(self, overrides: dict | None = None) -> dict:
        return validate_config(self, {**self.defaults, **(overrides or {})})

    def run(self, cfg: dict, threads: int = 1) -> ExperimentResult:
        return self.runner(cfg, max(1, int(threads)))


def lower_verdict(statistic, threshold, n, description="", **details) -> TestVerdict:
    """Verdict that passes when ``statistic >= threshold``."""
    return TestVerdict(float(statistic), float(threshold), int(n), bool(statistic >= threshold),
                       description, False, details)


def fraction_verdict(flags, threshold, description) -> TestVerdict:
    flags = np.asarray(flags, bool)
    if len(flags) == 0:
        return TestVerdict(np.nan, threshold, 0, False, description, inconclusive=True)
    return lower_verdict(flags.mean(), threshold, len(flags), description)


# --- config validation ---------------------------------------------------------

def _coerce(key, value, default):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigurationError(f"{key} must be true or false")
        return value
    if isinstance(default, int):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigurationError(f"{key} must be an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{key} must be a number, got {value!r}")
        return float(value)
    if isinstance(default, list):
        items = value if isinstance(value, list) else [value]
        proto = default[0] if default else 0.0
        return [_coerce(key, x, proto) for x in items]
    return value


def validate_config(exp: Experiment, cfg: dict) -> dict:
    unknown = sorted(set(cfg) - set(exp.defaults))
    if unknown:
        raise ConfigurationError(f"unknown keys for {exp.name}: {', '.join(unknown)}")
    out = {k: _coerce(k, cfg[k], exp.defaults[k]) for k in exp.defaults}
    if not 0 <= out["seed"] < 2**64:
        raise ConfigurationError("seed must be a 64-bit unsigned integer")
    for k, v in out.items():
        if (k.startswith("n_") or k.endswith("_paths") or k.endswith("_steps")) and isinstance(v, int) and v < 1:
            raise ConfigurationError(f"{k} must be positive")
    if exp.check is not None:
        exp.check(out)
    return out


def _require(cond, msg):
    if not cond:
        raise ConfigurationError(msg)


# --- sampling identity -----------------------------------------------------------

def run_sampling_identity(cfg, threads):
    seed = cfg["seed"]
    kw = dict(n_bins=cfg["n_bins"], allowance=cfg["allowance"], min_count=cfg["min_count"], threads=threads)
    v_bm, h_bm = collect(BMSignSampler(cfg["n_steps"], seed), cfg["n_paths"], threads=threads)
    main = binned_diagonal_verdict(v_bm, h_bm, cfg["n_bins"], cfg["allowance"], cfg["min_count"],
                                   "P(B_1 > 0 | V_1) vs V_1, Brownian motion")
    verdicts = {
        "bm": main,
        "bm_uniform_time_control": binned_diagonal_verdict(
            *collect(BMSignSampler(cfg["n_steps"], seed, surrogate=True), cfg["n_paths"], threads=threads),
            cfg["n_bins"], cfg["allowance"], cfg["min_count"], "uniform-time read-out (calibration control)"),
        "walsh": _sampler_verdict(WalshSectorSampler(cfg["walsh_steps"], seed + 1), cfg["walsh_paths"], kw),
        "dirichlet": _sampler_verdict(DirichletSectorSampler(cfg["dirichlet_theta"], seed + 2,
                                                             n_steps=cfg["dirichlet_steps"]),
                                      cfg["dirichlet_paths"], kw),
    }
    conv = _sampler_verdict(ConverseSampler(cfg["converse_a"], seed + 3), cfg["converse_paths"], kw)
    verdicts["converse_violates"] = lower_verdict(conv.statistic, cfg["allowance"], conv.n_samples,
                                                  "non-exchangeable sign process breaks the identity")
    c = main.details["curve"]
    rows = [{"bin_lo": c.edges[i], "bin_hi": c.edges[i + 1], "count": c.counts[i], "mean_V": c.mean_value[i],
             "mean_hit": c.mean_hit[i], "se": c.se[i]} for i in range(len(c.counts))]
    return ExperimentResult(verdicts, {"bm_binned_curve": rows})


def _sampler_verdict(sampler, n_paths, kw):
    v, h = collect(sampler, n_paths, threads=kw["threads"])
    return binned_diagonal_verdict(v, h, kw["n_bins"], kw["allowance"], kw["min_count"], type(sampler).__name__)


# --- beta laws -----------------------------------------------------------------------

def run_beta_laws(cfg, threads):
    verdicts, rows = {}, []
    bm = levy_beta_conditionals(2.0, 0.0, cfg["n_paths"], cfg["n_steps"], cfg["seed"],
                                cfg["ks_uncond"], cfg["ks_cond"], threads=threads)
    for key, v in bm.items():
        verdicts[f"bm_{key}"] = v
    for i, (a, b) in enumerate(zip(cfg["stable_alpha"], cfg["stable_beta"])):
        res = levy_beta_conditionals(a, b, cfg["stable_paths"], cfg["stable_steps"], cfg["seed"] + 1 + i,
                                     cfg["ks_uncond"], cfg["ks_cond"], threads=threads)
        for key, v in res.items():
            verdicts[f"stable_{a}_{b}_{key}"] = v
    for name, v in verdicts.items():
        rows.append({"test": name, "ks": v.statistic, "threshold": v.threshold, "n": v.n_samples})
    return ExperimentResult(verdicts, {"ks_distances": rows})


def run_perturbed(cfg, threads):
    verdicts, rows = {}, []
    for i, mu in enumerate(cfg["mu"]):
        res = petit_law_check(mu, cfg["n_paths"], cfg["n_steps"], cfg["seed"] + i,
                              cfg["ks_uncond"], cfg["ks_cond"], threads=threads)
        for key, v in res.items():
            verdicts[f"mu_{mu}_{key}"] = v
            rows.append({"mu": mu, "test": key, "ks": v.statistic, "threshold": v.threshold, "n": v.n_samples})
    return ExperimentResult(verdicts, {"ks_distances": rows})


def _check_mu(cfg):
    _require(all(m > 0 for m in cfg["mu"]), "mu values must be positive")


# --- exchangeability -----------------------------------------------------------------

def run_exchangeability(cfg, threads):
    law = DiscreteAngleLaw.equiprobable(cfg["n_angles"])
    verdicts, rows = {}, []
    for n in cfg["tuple_sizes"]:
        sampler = lambda s, r, term, n=n: walsh_tuples(cfg["n_steps"], law, n, s, r, term)
        v = exchangeability_chi_square(sampler, cfg["n_angles"], cfg["n_samples"], cfg["seed"] + n,
                                       cfg["level"], threads=threads)
        verdicts[f"walsh_n{n}"] = v
        rows.append({"process": "walsh", "tuple_size": n, "chi2": v.statistic, "critical": v.threshold,
                     "rejected": not v.passed})
    a = cfg["converse_a"]
    conv = exchangeability_chi_square(lambda s, r, term: converse_tuples(a, 2, s, r, term), 2,
                                      cfg["n_samples"], cfg["seed"] + 100, cfg["level"], threads=threads)
    verdicts["converse_rejected"] = lower_verdict(conv.statistic, conv.threshold, conv.n_samples,
                                                  "chi-square rejects exchangeability for the converse example")
    rows.append({"process": "converse", "tuple_size": 2, "chi2": conv.statistic, "critical": conv.threshold,
                 "rejected": not conv.passed})
    ex = converse_example_stats(a, cfg["n_samples"], cfg["seed"] + 200, threads=threads)
    verdicts["converse_exact_match"] = ex["match"]
    return ExperimentResult(verdicts, {"chi_square": rows},
                            {"converse_exact": ex["exact"], "converse_empirical": ex["empirical"]})


def run_converse_example(cfg, threads):
    a = cfg["a"]
    ex = converse_example_stats(a, cfg["n_samples"], cfg["seed"], threads=threads)
    verdicts = {"exact_match": ex["match"], "two_exchangeable": ex["two_exchangeable"]}
    conv = exchangeability_chi_square(lambda s, r, term: converse_tuples(a, 2, s, r, term), 2,
                                      cfg["n_samples"], cfg["seed"] + 10, cfg["level"], threads=threads)
    verdicts["not_sampling"] = lower_verdict(conv.statistic, conv.threshold, conv.n_samples,
                                             "terminal vs uniform-time read-out differ in law")
    rows = [{"quantity": "P(Theta_1 = Theta_U2)", "exact": ex["exact"][0], "empirical": ex["empirical"][0]},
            {"quantity": "P(Theta_U1 = Theta_U2)", "exact": ex["exact"][1], "empirical": ex["empirical"][1]}]
    return ExperimentResult(verdicts, {"converse_pair": rows},
                            {"exact": ex["exact"], "empirical": ex["empirical"]})


def _check_a(cfg):
    _require(0 < cfg["a"] < 1, "a must lie in (0, 1)")


# --- weight characterization --------------------------------------------------------

def run_weight_characterization(cfg, threads):
    alpha = cfg["alpha"]
    laws = {"point_mass_0": PointMass(0.0), "exponential_1": stats.expon(), "uniform_0_1": stats.uniform()}
    verdicts, rows = {}, []
    for name, F in laws.items():
        delta, se = stationary_weight_discrepancy(F, alpha)
        rows.append({"law": name, "alpha": alpha, "delta": delta, "se": se})
        if name == "uniform_0_1":
            verdicts[f"delta_{name}"] = lower_verdict(abs(delta), 0.01, 1, "|Delta| > 0.01 for a non-exponential law")
        else:
            verdicts[f"delta_{name}"] = upper_verdict(abs(delta), 1e-6, 1, "Delta = 0 for an exponential-type law")
    kw = dict(n_paths=cfg["n_paths"], n_steps=cfg["n_steps"], allowance=cfg["allowance"], threads=threads)
    curve_rows = []
    for i, lam in enumerate(cfg["lambdas"]):
        v = power_weight_identity_check(power_weight_cdf(lam), master_seed=cfg["seed"] + i, label=f"lambda={lam}", **kw)
        verdicts[f"power_{lam}"] = v
        curve_rows.append({"weight": f"power_{lam}", "statistic": v.statistic, "allowance": v.threshold})
    v = power_weight_identity_check(uniform_half_cdf, master_seed=cfg["seed"] + 99, label="uniform on [1/2, 1]", **kw)
    verdicts["uniform_half_violates"] = lower_verdict(v.statistic, v.threshold, v.n_samples,
                                                      "non-power weight breaks the identity")
    curve_rows.append({"weight": "uniform_half", "statistic": v.statistic, "allowance": v.threshold})
    return ExperimentResult(verdicts, {"discrepancy": rows, "weighted_identity": curve_rows})


def _check_lambdas(cfg):
    _require(all(x > 0 for x in cfg["lambdas"]) and cfg["alpha"] > 0, "lambdas and alpha must be positive")


# --- f(t, a) surface -----------------------------------------------------------------

def run_levmore_surface(cfg, threads):
    surf, checks = endpoint_surface_f(cfg["n_paths"], cfg["n_steps"], cfg["seed"], min_count=cfg["min_count"],
                                      threads=threads)
    stride = max(1, cfg["n_steps"] // cfg["t_points"])
    idx = np.arange(stride - 1, cfg["n_steps"], stride)
    rows = []
    for b, a in enumerate(surf.centers):
        for k in idx:
            rows.append({"a_bin": a, "mean_a": surf.mean_a[b], "count": surf.counts[b], "t": surf.times[k],
                         "f_hat": surf.f_hat[b, k], "se": surf.se[b, k]})
    return ExperimentResult(checks, {"surface": rows})


# --- quadrants -----------------------------------------------------------------------

def _summary(cfg, threads):
    return simulate_quadrant_summaries(cfg["n_paths"], cfg["n_steps"], cfg["seed"], threads=threads)


def quadrant_verdicts(summary, eps, min_deltas, allowance_const=1.0):
    res = trial_from_summary(summary, eps)
    verdicts = {}
    if res.inconclusive:
        verdicts["below_eps"] = TestVerdict(np.nan, eps, summary.n_paths, False, "no A_eps hits", inconclusive=True)
        verdicts["below_mean_muQ3"] = verdicts["below_eps"]
    else:
        hi = res.wilson_interval[1]
        verdicts["below_eps"] = TestVerdict(hi, eps, res.n_hits_A, hi < eps,
                                            "Wilson upper bound of P(W_1 in Q_3 | A_eps) strictly below eps")
        verdicts["below_mean_muQ3"] = TestVerdict(hi, res.mean_mu_Q3_given_A, res.n_hits_A,
                                                  hi < res.mean_mu_Q3_given_A,
                                                  "Wilson upper bound strictly below E[mu(Q_3) | A_eps]")
    if res.inconclusive:
        verdicts["p_A_order"] = TestVerdict(0.0, 10.0, res.n_paths, False, "no A_eps hits", inconclusive=True)
    else:
        verdicts["p_A_order"] = _order_verdict(res.p_A / eps, res.n_paths)
    verdicts["reflection_symmetry"] = reflection_symmetry_verdict(res)
    mins = min_law_mc_verdicts(summary, min_deltas, allowance_const)
    rows = []
    for d, m in mins.items():
        verdicts[f"min_law_{d}"] = m["match"]
        rows.append({"delta": d, "exact_min": m["exact"][0], "mc_min": m["mc"][0],
                     "exact_min_neg_end": m["exact"][1], "mc_min_neg_end": m["mc"][1]})
    verdicts.update(min_law_limit_verdicts())
    return res, verdicts, rows


def _order_verdict(ratio, n):
    ok = 0.01 <= ratio <= 10
    return TestVerdict(ratio, 10.0, n, ok, "P(A_eps)/eps in [0.01, 10]")


def min_law_limit_verdicts() -> dict:
    """delta-normalized small-delta limits of the exact minimum laws."""
    p1, _ = min_law_exact(0.001)
    _, p2 = min_law_exact(0.01)
    r1 = abs(p1 / 0.001 / np.sqrt(2 / np.pi) - 1)
    r2 = abs(p2 / 0.01**3 * np.sqrt(2 * np.pi) - 1)
    return {"min_limit_first": upper_verdict(r1, 0.005, 1, "P(min >= -d)/d vs sqrt(2/pi) at d=0.001"),
            "min_limit_second": upper_verdict(r2, 0.02, 1, "P(min >= -d, B_1 < 0)/d^3 vs 1/sqrt(2 pi) at d=0.01")}


def run_quadrant(cfg, threads):
    summary = _summary(cfg, threads)
    res, verdicts, rows = quadrant_verdicts(summary, cfg["epsilon"], cfg["min_deltas"], cfg["min_allowance_const"])
    return ExperimentResult(verdicts, {"quadrant": [res.row()], "min_laws": rows},
                            {"n_hits_A": res.n_hits_A, "n_joint": res.n_joint})


def scan_verdicts(summary, eps_list):
    scan = scan_from_summary(summary, eps_list)
    verdicts = {}
    ratios = [t.p_A / t.epsilon for t in scan.trials]
    ok = all(0.01 <= r <= 10 for r in ratios)
    verdicts["p_A_order"] = TestVerdict(max(ratios), 10.0, summary.n_paths, ok,
                                        "P(A_eps)/eps in [0.01, 10] for every eps", details={"min": min(ratios)})
    if np.isnan(scan.slope_joint):
        verdicts["joint_slope"] = TestVerdict(np.nan, 2.0, summary.n_paths, False, "too few joint hits",
                                              inconclusive=True)
    else:
        verdicts["joint_slope"] = lower_verdict(scan.slope_joint, 2.0, summary.n_paths,
                                                "log-log slope of P(A_eps, W_1 in Q_3) >= 2")
    verdicts["conditional_trend"] = monotone_trend_verdict(scan)
    info = {"slope_A": scan.slope_A, "slope_joint": scan.slope_joint, "slope_A_corrected": scan.slope_A_corrected,
            "slope_joint_corrected": scan.slope_joint_corrected, "fitted_C1": scan.fitted_C1,
            "excluded": list(scan.excluded)}
    return scan, verdicts, info


def run_quadrant_scan(cfg, threads):
    summary = _summary(cfg, threads)
    scan, verdicts, info = scan_verdicts(summary, cfg["epsilons"])
    for t in scan.trials:
        if t.n_hits_A:
            verdicts[f"below_eps_{t.epsilon}"] = TestVerdict(
                t.wilson_interval[1], t.epsilon, t.n_hits_A, t.wilson_interval[1] < t.epsilon,
                f"Wilson upper bound below eps at eps={t.epsilon}")
    return ExperimentResult(verdicts, {"scan": scan.rows()}, info)


def _check_eps(cfg):
    eps = cfg["epsilons"] if "epsilons" in cfg else [cfg["epsilon"]]
    for e in eps:
        _require(0 < e <= 1 / 6, f"epsilon must lie in (0, 1/6], got {e}")
        _require(cfg["n_steps"] >= 64 / e, f"n_steps={cfg['n_steps']} cannot resolve epsilon={e}")
    _require(all(d > 0 for d in cfg.get("min_deltas", [1])), "min_deltas must be positive")


# --- recovery --------------------------------------------------------------------------

def recovery_path_record(i, cfg, cover, n_steps, oracle=True):
    path = simulate_bm(3, TimeGrid(1.0, n_steps), RngStreamSpec(cfg["seed"], i))
    pts = path.points
    diam = point_diameter(pts)
    mu = occupation_measure(path)
    rep = recover_endpoint(mu, cover, cfg["j_range"], truth_range=pts, truth_endpoint=pts[-1],
                           const_high_dim=cfg["const_high_dim"])
    rec = {"path": i, "n_steps": n_steps, "diameter": diam, "psi_points": len(rep.psi_cloud),
           "hausdorff_norm": rep.hausdorff_to_truth / diam if rep.hausdorff_to_truth is not None else np.nan,
           "endpoint_err_norm": rep.endpoint_error / diam if rep.endpoint_error is not None else np.nan,
           "n_tied": rep.n_tied}
    if oracle:
        est, _ = oracle_endpoint(pts, cfg["oracle_gap_factor"] * _max_step(pts))
        rec["oracle_err_norm"] = float(np.linalg.norm(est - pts[-1]) / diam) if est is not None else np.nan
        if cfg["phi_range_diagnostic"]:
            try:
                est2, _ = phi_on_range(pts, _max_step(pts))
                rec["phi_range_err_norm"] = float(np.linalg.norm(est2 - pts[-1]) / diam) if est2 is not None else np.nan
            except UnreliableInputError:
                rec["phi_range_err_norm"] = np.nan
    return rec


def _max_step(pts):
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).max())


def _lt(x, thr):
    x = np.asarray(x, float)
    return np.where(np.isnan(x), False, x < thr)


def run_recovery_d3(cfg, threads):
    cover = build_cover(3, cfg["cover_j_max"])
    rows = parallel_map(lambda i: recovery_path_record(i, cfg, cover, cfg["n_steps"]), range(cfg["n_paths"]), threads)
    h = np.array([r["hausdorff_norm"] for r in rows])
    e = np.array([r["endpoint_err_norm"] for r in rows])
    o = np.array([r["oracle_err_norm"] for r in rows])
    verdicts = {
        "hausdorff_median": upper_verdict(np.nanmedian(h), cfg["hausdorff_max"], len(h),
                                          "median Hausdorff(psi, range)/diam"),
        "endpoint_fraction": fraction_verdict(_lt(e, cfg["endpoint_tol"]), cfg["endpoint_frac"],
                                              "fraction of paths with psi+phi endpoint error < tol*diam"),
        "oracle_fraction": fraction_verdict(_lt(o, cfg["oracle_tol"]), cfg["oracle_frac"],
                                            "fraction of paths with oracle endpoint error < tol*diam"),
    }
    med_o = np.nanmedian(np.where(np.isnan(o), np.inf, o))
    med_e = np.nanmedian(np.where(np.isnan(e), np.inf, e))
    verdicts["ablation_ordering"] = upper_verdict(med_o, med_e, len(rows), "median oracle error <= median psi+phi error")
    tables = {"paths": rows}
    info = {"median_hausdorff": float(np.nanmedian(h))}
    if cfg["trend_paths"] > 0:
        fine_cover = build_cover(3, cfg["trend_cover_j_max"])
        trend = parallel_map(lambda i: recovery_path_record(i, cfg, fine_cover, cfg["trend_steps"], oracle=False),
                             range(cfg["trend_paths"]), threads)
        tables["trend"] = trend
        h_fine = np.nanmedian([r["hausdorff_norm"] for r in trend])
        h_coarse = np.nanmedian(h[:cfg["trend_paths"]])
        verdicts["hausdorff_trend"] = upper_verdict(h_fine, h_coarse, len(trend),
                                                    "median Hausdorff decreases at the finer step count")
        info["median_hausdorff_fine"] = float(h_fine)
    return ExperimentResult(verdicts, tables, info)


def _check_recovery(cfg):
    _require(len(cfg["j_range"]) >= 1 and max(cfg["j_range"]) <= cfg["cover_j_max"],
             "j_range must lie within the cover depth")
    _require(cfg["trend_paths"] <= cfg["n_paths"], "trend_paths must not exceed n_paths")
    _require(cfg["oracle_gap_factor"] > 1, "oracle_gap_factor must exceed 1 (gap_tol > resolution)")


# --- thick points -----------------------------------------------------------------------

def run_thick_points(cfg, threads):
    radii = 2.0 ** -np.arange(cfg["k_min"], cfg["k_max"] + 1)
    n = cfg["n_steps"]

    def one(i):
        p = simulate_bm(2, TimeGrid(1.0, n), RngStreamSpec(cfg["seed"], i)).points[:-1]
        return thick_profile(p, 1.0 / n, radii)

    profiles = parallel_map(one, range(cfg["n_paths"]), threads)
    rng = RngStreamSpec(cfg["seed"], 0, (1,)).generator()
    m = n
    r = np.sqrt(rng.random(m))
    th = 2 * np.pi * rng.random(m)
    uniform = thick_profile(np.c_[r * np.cos(th), r * np.sin(th)], 1.0 / m, radii)
    rows = [{"source": f"bm_{i}", "r": rr, "ratio": v} for i, prof in enumerate(profiles) for rr, v in prof]
    rows += [{"source": "uniform_disk", "r": rr, "ratio": v} for rr, v in uniform]
    sups = np.array([max(v for _, v in prof) for prof in profiles])
    lo, hi = cfg["bracket"]
    verdicts = {
        "bm_bracket": TestVerdict(float(np.median(sups)), hi, len(sups), bool(np.all((sups >= lo) & (sups <= hi))),
                                  f"planar BM statistic in [{lo}, {hi}] for every path",
                                  details={"min": float(sups.min()), "max": float(sups.max())}),
        "uniform_smooth": upper_verdict(max(v for _, v in uniform), cfg["uniform_max"], m,
                                        "uniform disk measure statistic below bound"),
    }
    return ExperimentResult(verdicts, {"profiles": rows}, {"bm_statistics": sups.tolist()})


def _check_thick(cfg):
    _require(1 <= cfg["k_min"] <= cfg["k_max"], "need 1 <= k_min <= k_max")
    _require(len(cfg["bracket"]) == 2 and cfg["bracket"][0] < cfg["bracket"][1], "bracket must be lo,hi")


# --- topology oracles -------------------------------------------------------------------

def separated_segment_cloud(rng, n_range=(50, 500), max_parts=5, j_max=8):
    """Random cloud of 1..max_parts jittered segments whose mutual distances
    exceed 4 ball radii at the deepest resolution-valid level (configurations
    inside the ambiguous band between linking scales are redrawn)."""
    while True:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        k = int(rng.integers(1, max_parts + 1))
        cs = rng.uniform(-1, 1, (k, 3))
        dirs = rng.normal(size=(k, 3))
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        lengths = rng.uniform(0.05, 0.5, k)
        cuts = np.sort(rng.choice(np.arange(1, n), k - 1, replace=False)) if k > 1 else np.array([], int)
        sizes = np.diff(np.r_[0, cuts, n])
        parts = [c + d * (np.linspace(0, L, m) + rng.uniform(-0.1, 0.1, m) * L / m)[:, None]
                 for c, d, L, m in zip(cs, dirs, lengths, sizes)]
        res = max(float(np.linalg.norm(np.diff(p, axis=0), axis=1).max()) if len(p) > 1 else 0.0 for p in parts)
        cloud = PointCloud(np.vstack(parts), res)
        forest = component_forest(cloud, j_max)
        r = forest.cover.radius(forest.deepest.j)
        sep = min((cKDTree(parts[a]).query(parts[b])[0].min() for a in range(k) for b in range(a)), default=np.inf)
        if sep > 4 * r:
            return cloud, forest, r


def random_polyline(rng, n_segments=10):
    steps = rng.normal(size=(n_segments, 3))
    steps /= np.linalg.norm(steps, axis=1)[:, None]
    steps *= rng.uniform(0.2, 0.5, (n_segments, 1))
    return np.vstack([np.zeros(3), np.cumsum(steps, axis=0)])


def _containment(inner, outer, tol):
    """Largest distance from an inner point to the outer set (0 when inner is
    empty, inf when only outer is empty)."""
    if len(inner) == 0:
        return 0.0
    if len(outer) == 0:
        return np.inf
    return float(cKDTree(outer).query(inner)[0].max())


def run_topology_oracles(cfg, threads):
    rng = RngStreamSpec(cfg["seed"], 0).generator()
    verdicts, tables = {}, {}
    # N_delta against the union-find oracle
    rows, mism = [], 0
    for t in range(cfg["n_clouds"]):
        cloud, forest, r = separated_segment_cloud(rng)
        _, labels = brute_components(cloud.points, 2 * r)
        diam = np.array([point_diameter(cloud.points[labels == l]) for l in np.unique(labels)])
        for d in cfg["n_deltas"]:
            if d <= 4 * cloud.resolution:
                continue
            a, b = forest.count(d), int(np.sum(diam >= d))
            mism += a != b
            rows.append({"cloud": t, "n_points": len(cloud), "delta": d, "lattice": a, "union_find": b})
    verdicts["n_delta_vs_union_find"] = upper_verdict(mism, 0, len(rows), "mismatches between N_delta and oracle")
    tables["n_delta"] = rows
    # sandwich cut_{delta'} in A_delta in cut_{delta''}
    rows, worst = [], 0.0
    rng2 = RngStreamSpec(cfg["seed"], 1).generator()
    jw = list(cfg["j_window"])
    for t in range(cfg["n_polylines"]):
        v = random_polyline(rng2)
        cover = lattice_for(v)
        tol = 2 * cover.radius(jw[0])
        cloud = PointCloud.from_path(v, cover.radius(jw[-1] + 2) / 8)
        delta = cfg["sandwich_delta"] * cloud.diameter
        A = cut_set_A_delta(cloud, delta, jw).points
        strict = oracle_cutpoints(cloud.points, cfg["delta_hi_factor"] * delta, tol)
        loose = oracle_cutpoints(cloud.points, cfg["delta_lo_factor"] * delta, 1.05 * cloud.resolution)
        e1, e2 = _containment(strict, A, tol), _containment(A, loose, tol)
        worst = max(worst, e1 / tol, e2 / tol)
        rows.append({"polyline": t, "tol": tol, "n_A": len(A), "n_cut_hi": len(strict), "n_cut_lo": len(loose),
                     "lower_excess": e1, "upper_excess": e2})
    verdicts["sandwich"] = upper_verdict(worst, 1.0, len(rows), "max containment distance / (2 * 2^-j)")
    tables["sandwich"] = rows
    # constructed examples
    seg = PointCloud.from_path(np.linspace([0, 0, 0], [1, 0, 0], 200))
    cuts = delta_cutpoints(seg, 0.3, 4).points
    r4 = lattice_for(seg.points).radius(4)
    seg_ok = len(cuts) > 0 and np.all((cuts[:, 0] > r4) & (cuts[:, 0] < 1 - r4))
    verdicts["segment_cuts_interior"] = TestVerdict(float(len(cuts)), 1, len(cuts), bool(seg_ok),
                                                    "segment cut centres are interior")
    th = np.linspace(0, 2 * np.pi, 400)
    circ = PointCloud.from_path(np.c_[np.cos(th), np.sin(th), 0 * th])
    verdicts["loop_no_cuts"] = upper_verdict(len(delta_cutpoints(circ, 0.5, 4).points), 0, 1,
                                             "closed loop has no delta-cutpoints")
    line = np.linspace([0, 0, 0], [1, 0, 0], 101)
    # interior = beyond the strand of samples within gap_tol of either end
    interior = set(range(2, 99))
    got = set(cut_times_oracle(line, 0.015).tolist())
    verdicts["line_all_interior_cut_times"] = upper_verdict(
        len(interior ^ got), 0, 1, "monotone line: every interior time is a cut-time")
    # late cut-times of simulated BM in R^3
    n = cfg["bm_steps"]
    late = []
    for i in range(cfg["bm_paths"]):
        pts = simulate_bm(3, TimeGrid(1.0, n), RngStreamSpec(cfg["seed"] + 1, i)).points
        idx = cut_times_oracle(pts, 2 * _max_step(pts))
        late.append(bool(np.any(idx > 0.9 * n)))
    verdicts["bm_late_cut_times"] = fraction_verdict(late, 0.9, "cut-times in (0.9, 1) for >= 90% of paths")
    return ExperimentResult(verdicts, tables)


# --- registry -------------------------------------------------------------------------------

REGISTRY: dict[str, Experiment] = {}


def _register(name, anchor, defaults, runner, check=None):
    REGISTRY[name] = Experiment(name, anchor, {"seed": 20240601, **defaults}, runner, check)


_register("sampling-identity", "terminal sign given occupation time equals occupation time (sampling identity)",
          {"n_paths": 100000, "n_steps": 2**14, "n_bins": 20, "allowance": 0.02, "min_count": 100,
           "walsh_paths": 20000, "walsh_steps": 2**10, "dirichlet_paths": 20000, "dirichlet_theta": 1.0,
           "dirichlet_steps": 2**12, "converse_a": 1 / 3, "converse_paths": 20000},
          run_sampling_identity)
_register("beta-laws", "beta laws of occupation time given the terminal sign (Brownian and stable)",
          {"n_paths": 100000, "n_steps": 2**12, "ks_uncond": 0.02, "ks_cond": 0.03,
           "stable_alpha": [1.5], "stable_beta": [0.0], "stable_paths": 100000, "stable_steps": 2**12},
          run_beta_laws)
_register("perturbed", "negative occupation time of perturbed Brownian motion and its conditionals",
          {"mu": [0.5, 1.0], "n_paths": 100000, "n_steps": 2**12, "ks_uncond": 0.02, "ks_cond": 0.03},
          run_perturbed, _check_mu)
_register("exchangeability", "exchangeability of terminal and uniform-time angles (Walsh motion, converse)",
          {"n_angles": 3, "tuple_sizes": [2, 3], "n_samples": 10000, "n_steps": 2**10, "level": 0.01,
           "converse_a": 1 / 3},
          run_exchangeability)
_register("converse-example", "two-valued switch process: exact pair (1-a, a^2+(1-a)^2)",
          {"a": 1 / 3, "n_samples": 100000, "level": 0.01},
          run_converse_example, _check_a)
_register("weight-characterization", "exponential-type weights and power-law time weights",
          {"alpha": 1.0, "lambdas": [0.5, 1.0, 2.0], "n_paths": 50000, "n_steps": 2**12, "allowance": 0.02},
          run_weight_characterization, _check_lambdas)
_register("levmore-surface", "f(t, a) = P(B_t > 0 | V_1 = a) surface",
          {"n_paths": 10**6, "n_steps": 2**10, "min_count": 1000, "t_points": 64},
          run_levmore_surface)
_register("quadrant", "planar Brownian quadrant counterexample at one epsilon, minimum laws",
          {"epsilon": 0.05, "n_paths": 10**6, "n_steps": 2**14, "min_deltas": [0.05, 0.1, 0.2],
           "min_allowance_const": 1.0},
          run_quadrant, _check_eps)
_register("quadrant-scan", "scaling of P(A_eps) and the joint probability over epsilon",
          {"epsilons": [0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1], "n_paths": 10**6, "n_steps": 2**14},
          run_quadrant_scan, _check_eps)
_register("recovery-d3", "range and endpoint recovery from the projected occupation measure in R^3",
          {"n_paths": 50, "n_steps": 2**16, "cover_j_max": 6, "j_range": [4, 5, 6], "const_high_dim": 1.0,
           "hausdorff_max": 0.25, "endpoint_tol": 0.15, "endpoint_frac": 0.6, "oracle_tol": 0.05,
           "oracle_frac": 0.9, "oracle_gap_factor": 1.05, "phi_range_diagnostic": False,
           "trend_paths": 10, "trend_steps": 2**18, "trend_cover_j_max": 7},
          run_recovery_d3, _check_recovery)
_register("thick-points", "planar thick-point statistic against a smooth reference",
          {"n_paths": 5, "n_steps": 2**18, "k_min": 3, "k_max": 8, "bracket": [0.5, 8.0], "uniform_max": 0.5},
          run_thick_points, _check_thick)
_register("topology-oracles", "component counts and cut sets against brute-force oracles",
          {"n_clouds": 100, "n_deltas": [0.05, 0.1, 0.2, 0.3], "n_polylines": 20, "j_window": [3, 4],
           "sandwich_delta": 0.25, "delta_hi_factor": 2.0, "delta_lo_factor": 0.5, "bm_paths": 100,
           "bm_steps": 2**14},
          run_topology_oracles)


def get(name: str) -> Experiment:
    return REGISTRY[name]
