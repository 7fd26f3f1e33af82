"""Statistical checks of the sampling identity and the beta laws it implies.

A *sampler* here is any callable ``sampler(replicas) -> (values, hits)``
returning, for each replica index, the occupation mass mu(B) of a fixed
event B and the indicator that the terminal value lies in B. Samplers draw
each replica from its own random stream, so results do not depend on how
replicas are batched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special, stats

from .errors import ConfigurationError, DomainError
from .occupation import conditional_given_cap_mass
from .paths import (DiscreteAngleLaw, TimeGrid, UniformAngleLaw, brownian_batch,
                    perturbed_from_bm, positivity_parameter, simulate_dirichlet_angle_process,
                    simulate_stable_levy, simulate_walsh_angles)
from .rng import RngStreamSpec, batch_ranges, parallel_map

DEFAULT_BATCH = 1000


# --- verdicts and basic distribution tools -----------------------------------

@dataclass
class TestVerdict:
    statistic: float
    threshold: float
    n_samples: int
    passed: bool
    description: str = ""
    inconclusive: bool = False
    details: dict = field(default_factory=dict, repr=False)

    __test__ = False  # not a pytest class

    @property
    def status(self) -> str:
        if self.inconclusive:
            return "inconclusive"
        return "pass" if self.passed else "fail"

    def record(self, name: str, seed=None) -> dict:
        return {"name": name, "statistic": float(self.statistic), "threshold": float(self.threshold),
                "n": int(self.n_samples), "passed": bool(self.passed), "status": self.status,
                "seed": seed, "description": self.description}


def upper_verdict(statistic, threshold, n, description="", **details) -> TestVerdict:
    """Verdict that passes when ``statistic <= threshold``."""
    return TestVerdict(float(statistic), float(threshold), int(n), bool(statistic <= threshold),
                       description, False, details)


@dataclass(frozen=True)
class BetaLaw:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ConfigurationError(f"beta parameters must be positive, got ({self.a}, {self.b})")

    def cdf(self, x):
        return beta_cdf(self, x)

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)


def beta_cdf(law: BetaLaw, x):
    """Regularized incomplete beta function I_x(a, b)."""
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)) or np.any(np.isnan(x)):
        raise DomainError("beta_cdf argument must lie in [0, 1]")
    out = special.betainc(law.a, law.b, x)
    return float(out) if out.ndim == 0 else out


def ks_distance(samples, cdf: Callable) -> float:
    """Sup distance between the empirical CDF of ``samples`` and ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = len(x)
    if n == 0:
        raise DomainError("ks_distance needs at least one sample")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n), 0.0))


def ks_verdict(samples, law: BetaLaw, threshold: float, description: str = "") -> TestVerdict:
    samples = np.asarray(samples)
    if len(samples) == 0:
        return TestVerdict(np.nan, threshold, 0, False, description, inconclusive=True)
    return upper_verdict(ks_distance(samples, law.cdf), threshold, len(samples), description,
                         law=(law.a, law.b))


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n <= 0:
        return (0.0, 1.0)
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return (max(0.0, mid - half), min(1.0, mid + half))


# --- path functionals --------------------------------------------------------

def bm_rows(n_steps: int, master_seed: int, replicas) -> np.ndarray:
    """1-d Brownian paths on [0, 1], shape ``(len(replicas), n_steps + 1)``."""
    return brownian_batch(1, TimeGrid(1.0, n_steps), master_seed, list(replicas))[:, :, 0]


def positive_time(y: np.ndarray) -> np.ndarray:
    """Left-endpoint fraction of time with y >= 0 (the origin projects to +1)."""
    return np.mean(y[..., :-1] >= 0, axis=-1)


def collect(fn, n_paths: int, batch: int = DEFAULT_BATCH, threads: int = 1):
    """Concatenate ``fn(replica_range)`` tuples over batches of replicas
    (batch order is kept, so results do not depend on ``threads``)."""
    parts = parallel_map(fn, batch_ranges(n_paths, batch), threads)
    return tuple(np.concatenate(c) for c in zip(*parts))


# --- samplers ----------------------------------------------------------------

@dataclass(frozen=True)
class BMSignSampler:
    """d = 1 Brownian motion, B = {+1}. ``surrogate`` reads Theta at an
    independent uniform time instead of time 1 (calibration control)."""

    n_steps: int
    master_seed: int
    surrogate: bool = False

    def __call__(self, replicas):
        y = bm_rows(self.n_steps, self.master_seed, replicas)
        v = positive_time(y)
        if self.surrogate:
            u = np.array([RngStreamSpec(self.master_seed, r).child(1).generator().random() for r in replicas])
            k = np.minimum((u * self.n_steps).astype(int), self.n_steps - 1)
            hit = y[np.arange(len(y)), k] >= 0
        else:
            hit = y[:, -1] > 0
        return v, hit.astype(float)


@dataclass(frozen=True)
class WalshSectorSampler:
    """Angular part of Walsh's Brownian motion, B = angles in [low, high)."""

    n_steps: int
    master_seed: int
    angle_law: object = UniformAngleLaw()
    sector: tuple = (0.0, np.pi / 2)

    def __call__(self, replicas):
        lo, hi = self.sector
        pred = lambda a: (a >= lo) & (a < hi)
        grid = TimeGrid(1.0, self.n_steps)
        v, h = [], []
        for r in replicas:
            p = simulate_walsh_angles(grid, self.angle_law, RngStreamSpec(self.master_seed, r))
            v.append(p.occupation(pred))
            h.append(float(pred(p.angle_at(1.0))))
        return np.array(v), np.array(h)


@dataclass(frozen=True)
class DirichletSectorSampler:
    theta: float
    master_seed: int
    angle_law: object = UniformAngleLaw()
    sector: tuple = (0.0, np.pi / 2)
    n_steps: int = 2**14

    def __call__(self, replicas):
        lo, hi = self.sector
        pred = lambda a: (a >= lo) & (a < hi)
        grid = TimeGrid(1.0, self.n_steps)
        v, h = [], []
        for r in replicas:
            p = simulate_dirichlet_angle_process(self.theta, self.angle_law, RngStreamSpec(self.master_seed, r), grid)
            v.append(p.occupation(pred))
            h.append(float(pred(p.angle_at(1.0))))
        return np.array(v), np.array(h)


@dataclass(frozen=True)
class ConverseSampler:
    """Theta_t = X 1{t<a} + Y 1{t>=a} with (X, Y) = (+1, -1) or (-1, +1)
    equally likely; B = {+1}."""

    a: float
    master_seed: int

    def __call__(self, replicas):
        x = np.array([1.0 if RngStreamSpec(self.master_seed, r).generator().random() < 0.5 else -1.0
                      for r in replicas])
        mu_plus = np.where(x > 0, self.a, 1 - self.a)
        return mu_plus, (x < 0).astype(float)


# --- sampling identity -------------------------------------------------------

def binned_diagonal_verdict(values, hits, n_bins=20, allowance=0.02, min_count=100,
                            description="", edges=None) -> TestVerdict:
    """Compare E[hit | value-bin] with the mean value in each bin.

    statistic = max over bins with >= min_count samples of |dev| - 3 SE;
    passes when it does not exceed ``allowance``.
    """
    curve = conditional_given_cap_mass(values, hits, n_bins, edges=edges)
    occ = curve.occupied(min_count)
    if not np.any(occ):
        return TestVerdict(np.nan, allowance, len(np.ravel(values)), False, description,
                           inconclusive=True, details={"curve": curve})
    excess = np.abs(curve.mean_hit - curve.mean_value) - 3 * curve.se
    stat = float(np.max(excess[occ]))
    return upper_verdict(stat, allowance, len(np.ravel(values)), description, curve=curve)


def sampling_identity_check(sampler, n_paths: int, n_bins: int = 20, allowance: float = 0.02,
                            min_count: int = 100, batch: int = DEFAULT_BATCH, threads: int = 1) -> TestVerdict:
    values, hits = collect(sampler, n_paths, batch, threads)
    return binned_diagonal_verdict(values, hits, n_bins, allowance, min_count,
                                   f"P(Theta_1 in B | mu(B)) vs mu(B), {type(sampler).__name__}")


# --- beta-law corollaries ----------------------------------------------------

def stable_functionals(alpha, beta_skew, n_steps, master_seed, replicas):
    """(time positive, Y_1) for stable Levy paths; alpha = 2 reuses the
    Brownian generator, which differs from the stable one by a scale only."""
    if alpha == 2:
        y = bm_rows(n_steps, master_seed, replicas)
        return positive_time(y), y[:, -1].copy()
    grid = TimeGrid(1.0, n_steps)
    v, e = [], []
    for r in replicas:
        p = simulate_stable_levy(alpha, beta_skew, grid, RngStreamSpec(master_seed, r)).points[:, 0]
        v.append(np.mean(p[:-1] >= 0))
        e.append(p[-1])
    return np.array(v), np.array(e)


def levy_beta_conditionals(alpha: float, beta_skew: float, n_paths: int, n_steps: int,
                           master_seed: int = 0, ks_uncond=0.02, ks_cond=0.03,
                           batch: int = DEFAULT_BATCH, threads: int = 1) -> dict:
    """KS verdicts for V_1, (V_1 | Y_1 > 0) and (V_1 | Y_1 < 0)."""
    p = positivity_parameter(alpha, beta_skew)
    v, end = collect(lambda r: stable_functionals(alpha, beta_skew, n_steps, master_seed, r), n_paths, batch, threads)
    return {
        "unconditional": ks_verdict(v, BetaLaw(p, 1 - p), ks_uncond, "V_1 vs beta(p, 1-p)"),
        "given_positive": ks_verdict(v[end > 0], BetaLaw(1 + p, 1 - p), ks_cond, "V_1 | Y_1>0 vs beta(1+p, 1-p)"),
        "given_negative": ks_verdict(v[end < 0], BetaLaw(p, 2 - p), ks_cond, "V_1 | Y_1<0 vs beta(p, 2-p)"),
    }


def perturbed_functionals(mus, n_steps, master_seed, replicas):
    """Negative time V_1^- and sign of Y_1 for each mu in ``mus`` from shared B."""
    b = bm_rows(n_steps, master_seed, replicas)
    out = []
    for mu in mus:
        y = perturbed_from_bm(b, mu)
        out.append(np.mean(y[:, :-1] < 0, axis=1))
        out.append(y[:, -1].copy())
    return tuple(out)


def petit_law_check(mu: float, n_paths: int, n_steps: int, master_seed: int = 0,
                    ks_uncond=0.02, ks_cond=0.03, batch: int = DEFAULT_BATCH, threads: int = 1) -> dict:
    if not mu > 0:
        raise ConfigurationError("mu must be positive")
    vneg, end = collect(lambda r: perturbed_functionals([mu], n_steps, master_seed, r), n_paths, batch, threads)
    c = 1 / (2 * mu)
    return {
        "unconditional": ks_verdict(vneg, BetaLaw(0.5, c), ks_uncond, "V^- vs beta(1/2, 1/(2 mu))"),
        "given_negative": ks_verdict(vneg[end < 0], BetaLaw(1.5, c), ks_cond, "V^- | Y_1<0 vs beta(3/2, 1/(2 mu))"),
        "given_positive": ks_verdict(vneg[end > 0], BetaLaw(0.5, 1 + c), ks_cond, "V^- | Y_1>0 vs beta(1/2, 1+1/(2 mu))"),
    }


# --- exchangeability ---------------------------------------------------------

def homogeneity_chi_square(sample_a: np.ndarray, sample_b: np.ndarray, k: int,
                           level: float = 0.01, cell_budget: int = 10**4) -> TestVerdict:
    """Two-sample chi-square test that two samples of k-ary n-tuples share a law.

    Cells empty in both samples are dropped. Passes (non-rejection) when the
    statistic does not exceed the (1 - level) quantile.
    """
    a = np.asarray(sample_a, dtype=np.int64)
    b = np.asarray(sample_b, dtype=np.int64)
    n = a.shape[1]
    if k**n > cell_budget:
        raise ConfigurationError(f"{k}^{n} cells exceed the budget of {cell_budget}")
    if a.min() < 0 or b.min() < 0 or a.max() >= k or b.max() >= k:
        raise DomainError("tuple entries must be category indices in 0..k-1")
    base = k ** np.arange(n)
    ca = np.bincount(a @ base, minlength=k**n)
    cb = np.bincount(b @ base, minlength=k**n)
    keep = (ca + cb) > 0
    table = np.vstack([ca[keep], cb[keep]])
    if table.shape[1] < 2:
        return upper_verdict(0.0, 0.0, len(a) + len(b), "single occupied cell")
    stat, _, dof, _ = stats.chi2_contingency(table, correction=False)
    crit = stats.chi2.ppf(1 - level, dof)
    return upper_verdict(stat, crit, len(a) + len(b), f"chi-square homogeneity, {dof} dof", dof=dof)


def walsh_tuples(n_steps, angle_law: DiscreteAngleLaw, tuple_size, master_seed, replicas, terminal: bool):
    """Category tuples (Theta_1 or Theta_{U_1}, Theta_{U_2}, ..., Theta_{U_n})."""
    grid = TimeGrid(1.0, n_steps)
    out = np.empty((len(replicas), tuple_size), dtype=np.int64)
    for row, r in enumerate(replicas):
        s = RngStreamSpec(master_seed, r)
        p = simulate_walsh_angles(grid, angle_law, s)
        u = s.child(1).generator().random(tuple_size)
        if terminal:
            u[0] = 1.0
        out[row] = angle_law.category(p.angle_at(u))
    return (out,)


def converse_tuples(a, tuple_size, master_seed, replicas, terminal: bool):
    out = np.empty((len(replicas), tuple_size), dtype=np.int64)
    for row, r in enumerate(replicas):
        g = RngStreamSpec(master_seed, r).generator()
        x = 1 if g.random() < 0.5 else 0
        u = g.random(tuple_size)
        if terminal:
            u[0] = 1.0
        out[row] = np.where(u < a, x, 1 - x)
    return (out,)


def exchangeability_chi_square(tuple_sampler, k: int, n_samples: int, master_seed: int = 0,
                               level: float = 0.01, batch: int = DEFAULT_BATCH, threads: int = 1) -> TestVerdict:
    """Compare (Theta_1, Theta_{U_2}, ...) with (Theta_{U_1}, Theta_{U_2}, ...).

    ``tuple_sampler(master_seed, replicas, terminal)`` returns a 1-tuple with
    an integer array of categories. The two samples come from independent
    seeds (``master_seed`` and ``master_seed + 1``).
    """
    (a,) = collect(lambda r: tuple_sampler(master_seed, r, True), n_samples, batch, threads)
    (b,) = collect(lambda r: tuple_sampler(master_seed + 1, r, False), n_samples, batch, threads)
    return homogeneity_chi_square(a, b, k, level)


def converse_exact(a: float) -> tuple[float, float]:
    """(P(Theta_1 = Theta_{U_2}), P(Theta_{U_1} = Theta_{U_2})) when P(X = Y) = 0."""
    if not 0 < a < 1:
        raise DomainError("a must lie in (0, 1)")
    return 1 - a, a * a + (1 - a) ** 2


def converse_example_stats(a: float, n_samples: int, master_seed: int = 0, batch: int = DEFAULT_BATCH, threads: int = 1) -> dict:
    exact = converse_exact(a)
    (t1,) = collect(lambda r: converse_tuples(a, 2, master_seed, r, True), n_samples, batch, threads)
    (tu,) = collect(lambda r: converse_tuples(a, 2, master_seed + 1, r, False), n_samples, batch, threads)
    emp = (float(np.mean(t1[:, 0] == t1[:, 1])), float(np.mean(tu[:, 0] == tu[:, 1])))
    se = [np.sqrt(p * (1 - p) / n_samples) for p in exact]
    z = max(abs(e - x) / s for e, x, s in zip(emp, exact, se))
    match = upper_verdict(z, 3.0, n_samples, "empirical pair within 3 SE of exact")
    # two-exchangeability: (Theta_1, Theta_U2) vs (Theta_U2, Theta_1), independent samples
    (t1b,) = collect(lambda r: converse_tuples(a, 2, master_seed + 2, r, True), n_samples, batch, threads)
    sym = homogeneity_chi_square(t1, t1b[:, ::-1], 2)
    return {"exact": exact, "empirical": emp, "match": match, "two_exchangeable": sym}


# --- stationary weights and power densities ----------------------------------

@dataclass(frozen=True)
class PointMass:
    at: float = 0.0


def stationary_weight_discrepancy(F, alpha: float, n_mc: int = 10**6, seed: int = 0):
    """Delta = E exp(-alpha xi_1) - E exp(-alpha |xi_1 - xi_2|), xi_i iid F.

    ``F`` is a :class:`PointMass`, a frozen scipy continuous distribution on
    [0, inf) (integrated numerically), or a callable ``F(rng, size)``
    (Monte Carlo). Returns (delta, standard_error); SE is 0 for quadrature.
    """
    if not alpha > 0:
        raise ConfigurationError("alpha must be positive")
    if isinstance(F, PointMass):
        return float(np.exp(-alpha * F.at) - 1.0), 0.0
    if hasattr(F, "pdf"):
        lo, hi = F.support()
        if lo < 0:
            raise DomainError("F must be concentrated on [0, inf)")
        t1 = integrate.quad(lambda x: np.exp(-alpha * x) * F.pdf(x), lo, hi, epsabs=1e-13, epsrel=1e-12)[0]

        def inner(x):
            left = integrate.quad(lambda y: np.exp(-alpha * (x - y)) * F.pdf(y), lo, x, epsabs=1e-13)[0]
            right = integrate.quad(lambda y: np.exp(-alpha * (y - x)) * F.pdf(y), x, hi, epsabs=1e-13)[0]
            return left + right

        t2 = integrate.quad(lambda x: inner(x) * F.pdf(x), lo, hi, epsabs=1e-12, epsrel=1e-10, limit=200)[0]
        return float(t1 - t2), 0.0
    rng = RngStreamSpec(seed).generator()
    x = F(rng, n_mc)
    y = F(rng, n_mc)
    d = np.exp(-alpha * np.abs(x)) - np.exp(-alpha * np.abs(x - y))
    return float(d.mean()), float(d.std(ddof=1) / np.sqrt(n_mc))


def power_weight_cdf(lam: float):
    if not lam > 0:
        raise ConfigurationError("lambda must be positive")
    return lambda t: np.asarray(t, dtype=float) ** lam


def uniform_half_cdf(t):
    """CDF of the uniform law on [1/2, 1] (a non-power weight)."""
    return np.clip(2 * np.asarray(t, dtype=float) - 1, 0, 1)


def weighted_sign_functionals(weight_cdf, n_steps, master_seed, replicas):
    """(int_0^1 1{B_s >= 0} dF(s), 1{B_1 > 0}) with left-endpoint weights."""
    t = np.linspace(0, 1, n_steps + 1)
    w = np.diff(weight_cdf(t))
    y = bm_rows(n_steps, master_seed, replicas)
    return (y[:, :-1] >= 0) @ w, (y[:, -1] > 0).astype(float)


def power_weight_identity_check(weight_cdf, n_paths: int, n_steps: int = 2**12, master_seed: int = 0,
                                n_bins: int = 20, allowance: float = 0.02, batch: int = DEFAULT_BATCH, threads: int = 1,
                                label: str = "") -> TestVerdict:
    """Binned regression of 1{B_1>0} on the F-weighted positive time."""
    v, h = collect(lambda r: weighted_sign_functionals(weight_cdf, n_steps, master_seed, r), n_paths, batch, threads)
    return binned_diagonal_verdict(v, h, n_bins, allowance, description=f"E[X_1 | X_F] = X_F {label}".strip())


# --- the f(t, a) surface ------------------------------------------------------

def centered_edges(step: float = 0.05) -> np.ndarray:
    """Bin edges whose bins are centred at multiples of ``step`` in [0, 1]."""
    m = int(round(1 / step))
    return np.concatenate([[0.0], (np.arange(m) + 0.5) * step, [1.0]])


@dataclass(frozen=True, eq=False)
class EndpointSurface:
    times: np.ndarray      # t_1..t_n
    edges: np.ndarray
    counts: np.ndarray
    mean_a: np.ndarray
    f_hat: np.ndarray      # (bins, n_steps)
    se: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        c = 0.5 * (self.edges[:-1] + self.edges[1:])
        c[0], c[-1] = 0.0, 1.0
        return c

    def at(self, t: float) -> np.ndarray:
        k = int(np.argmin(np.abs(self.times - t)))
        return self.f_hat[:, k]


def surface_accumulate(n_steps, edges, master_seed, replicas):
    y = bm_rows(n_steps, master_seed, replicas)
    v = positive_time(y)
    k = np.clip(np.searchsorted(edges, v, side="right") - 1, 0, len(edges) - 2)
    onehot = np.zeros((len(v), len(edges) - 1))
    onehot[np.arange(len(v)), k] = 1.0
    pos = (y[:, 1:] > 0).astype(float)
    return (onehot.T @ pos)[None], onehot.sum(0)[None], (onehot.T @ v)[None]


def endpoint_surface_f(n_paths: int, n_steps: int = 2**10, master_seed: int = 0, edges=None,
                       min_count: int = 1000, batch: int = DEFAULT_BATCH, threads: int = 1):
    """Estimate f(t, a) = P(B_t > 0 | V_1 = a) by binning V_1, and run the
    four structural checks. Returns (surface, verdicts)."""
    edges = centered_edges() if edges is None else np.asarray(edges, float)
    sums, counts, vs = collect(lambda r: surface_accumulate(n_steps, edges, master_seed, r), n_paths, batch, threads)
    sums, counts, vs = sums.sum(0), counts.sum(0), vs.sum(0)
    with np.errstate(invalid="ignore", divide="ignore"):
        f = sums / counts[:, None]
        mean_a = vs / counts
        se = np.sqrt(np.clip(f * (1 - f), 0.25 / counts[:, None], None) / counts[:, None])
    times = np.arange(1, n_steps + 1) / n_steps
    surf = EndpointSurface(times, edges, counts, mean_a, f, se)
    return surf, surface_checks(surf, min_count)


def surface_checks(surf: EndpointSurface, min_count: int = 1000) -> dict:
    c = surf.centers
    ok = surf.counts >= min_count
    n = int(surf.counts.sum())
    central = ok & (c >= 0.3) & (c <= 0.7)
    if not np.any(central):
        bad = TestVerdict(np.nan, 0, n, False, "sparse bins", inconclusive=True)
        return {"integral": bad, "terminal": bad, "initial": bad, "overshoot": bad}
    dt = surf.times[1] - surf.times[0]
    # left-endpoint integral over [0, 1]; f(0) = 0 is not stored, t_n = 1 is
    integral = (surf.f_hat[:, :-1].sum(axis=1)) * dt
    dev_i = np.abs(integral - c)[central]
    v_int = upper_verdict(dev_i.max(), 0.02, n, "|int f(t,a) dt - a| on central bins")
    dev_t = (np.abs(surf.f_hat[:, -1] - surf.mean_a) - 3 * surf.se[:, -1])[central]
    v_term = upper_verdict(dev_t.max(), 0.02, n, "f(1,a) vs a within 3 SE + 0.02")
    f0 = surf.at(0.01)[central]
    v_init = upper_verdict(np.abs(f0 - 0.5).max(), 0.05, n, "f(0.01,a) in [0.45, 0.55] for a in [0.3, 0.7]")
    target = int(np.argmin(np.abs(c - 0.75)))
    if surf.counts[target] < min_count:
        v_over = TestVerdict(np.nan, 0, n, False, "a = 0.75 bin sparse", inconclusive=True)
    else:
        z = (surf.f_hat[target, :-1] - surf.mean_a[target]) / surf.se[target, :-1]
        # passes when max z exceeds 3, expressed as -max z <= -3
        v_over = upper_verdict(-z.max(), -3.0, n, "exists t < 1 with f(t, 0.75) > a + 3 SE",
                               t_star=float(surf.times[int(np.argmax(z))]))
    return {"integral": v_int, "terminal": v_term, "initial": v_init, "overshoot": v_over}
