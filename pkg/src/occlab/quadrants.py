"""Quadrant occupation times of planar Brownian motion and the rare event
A_eps = {mu(Q_2), mu(Q_3), mu(Q_4) all in [eps, 2 eps]}.

One pass over the paths stores a small per-path summary (quadrant times,
terminal quadrant, minimum and terminal value of the first coordinate); every
epsilon and the one-dimensional minimum laws are then evaluated from it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import special
from scipy.stats import spearmanr

from .errors import ConfigurationError, DomainError
from .occupation import quadrant_index
from .rng import RngStreamSpec, batch_ranges, parallel_map
from .sampling_laws import TestVerdict, upper_verdict, wilson_interval

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(40)


def min_law_exact(delta: float) -> tuple[float, float]:
    """(P(min_{[0,1]} B >= -delta), P(min >= -delta, B_1 < 0)).

    The first is 2 Phi(delta) - 1. The second equals the integral over
    [-delta, 0] of phi(x) - phi(x - delta); it is evaluated in the form
    -phi(x) expm1(x delta - delta^2/2) by Gauss-Legendre quadrature, which
    avoids the cancellation of the closed form for small delta.
    """
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    p1 = float(special.erf(delta / np.sqrt(2)))
    x = -delta / 2 + delta / 2 * _GL_NODES
    phi = np.exp(-x * x / 2) / np.sqrt(2 * np.pi)
    p2 = float(delta / 2 * np.sum(_GL_WEIGHTS * -phi * np.expm1(x * delta - delta * delta / 2)))
    return p1, p2


@njit(cache=True)
def _summarize(inc, counts, final_q, xmin, xend):
    """Walk each path from the origin, counting left-endpoint quadrant steps."""
    b, n, _ = inc.shape
    for p in range(b):
        x = 0.0
        y = 0.0
        m = 0.0
        c0 = 1  # the origin belongs to Q_1
        c1 = 0
        c2 = 0
        c3 = 0
        for k in range(n):
            x += inc[p, k, 0]
            y += inc[p, k, 1]
            if x < m:
                m = x
            if k == n - 1:
                break
            if x >= 0.0 and y > 0.0:
                c0 += 1
            elif x > 0.0 and y <= 0.0:
                c1 += 1
            elif x <= 0.0 and y < 0.0:
                c2 += 1
            elif x < 0.0 and y >= 0.0:
                c3 += 1
            else:
                c0 += 1
        counts[p, 0] = c0
        counts[p, 1] = c1
        counts[p, 2] = c2
        counts[p, 3] = c3
        if x >= 0.0 and y > 0.0:
            final_q[p] = 0
        elif x > 0.0 and y <= 0.0:
            final_q[p] = 1
        elif x <= 0.0 and y < 0.0:
            final_q[p] = 2
        elif x < 0.0 and y >= 0.0:
            final_q[p] = 3
        else:
            final_q[p] = 0
        xmin[p] = m
        xend[p] = x


@dataclass(frozen=True, eq=False)
class QuadrantSummary:
    n_steps: int
    counts: np.ndarray    # (N, 4) steps spent in each quadrant
    final_q: np.ndarray   # (N,) terminal quadrant 0..3
    x_min: np.ndarray     # (N,) discrete minimum of the first coordinate
    x_end: np.ndarray     # (N,)

    @property
    def n_paths(self) -> int:
        return len(self.final_q)

    @property
    def occupations(self) -> np.ndarray:
        return self.counts / self.n_steps

    def subset(self, idx) -> "QuadrantSummary":
        return QuadrantSummary(self.n_steps, self.counts[idx], self.final_q[idx], self.x_min[idx], self.x_end[idx])


def _summary_batch(n_steps, master_seed, replicas):
    b = len(replicas)
    inc = np.empty((b, n_steps, 2))
    sd = np.sqrt(1.0 / n_steps)
    for row, r in enumerate(replicas):
        inc[row] = RngStreamSpec(master_seed, r).generator().standard_normal((n_steps, 2))
    inc *= sd
    counts = np.empty((b, 4), np.int64)
    fq = np.empty(b, np.int8)
    xmin = np.empty(b)
    xend = np.empty(b)
    _summarize(inc, counts, fq, xmin, xend)
    return counts, fq, xmin, xend


def simulate_quadrant_summaries(n_paths: int, n_steps: int, master_seed: int,
                                batch: int = 500, threads: int = 1, first_replica: int = 0) -> QuadrantSummary:
    if n_paths < 1 or n_steps < 1:
        raise ConfigurationError("n_paths and n_steps must be positive")
    ranges = [range(first_replica + r.start, first_replica + r.stop) for r in batch_ranges(n_paths, batch)]
    parts = parallel_map(lambda r: _summary_batch(n_steps, master_seed, r), ranges, threads)
    cols = [np.concatenate(c) for c in zip(*parts)]
    return QuadrantSummary(n_steps, *cols)


def summarize_paths(points: np.ndarray) -> QuadrantSummary:
    """Summary of explicit paths ``(B, n+1, 2)`` (reference implementation)."""
    n = points.shape[1] - 1
    q = quadrant_index(points[:, :-1, 0], points[:, :-1, 1])
    counts = np.stack([(q == k).sum(axis=1) for k in range(4)], axis=1)
    fq = quadrant_index(points[:, -1, 0], points[:, -1, 1])
    return QuadrantSummary(n, counts, fq, points[:, :, 0].min(axis=1), points[:, -1, 0].copy())


# --- trials ------------------------------------------------------------------

@dataclass(frozen=True)
class QuadrantTrialResult:
    epsilon: float
    n_paths: int
    n_hits_A: int
    n_joint: int
    conditional_estimate: float
    wilson_interval: tuple
    mean_mu_Q3_given_A: float
    n_final_Q2: int = 0
    n_final_Q4: int = 0

    @property
    def inconclusive(self) -> bool:
        return self.n_hits_A == 0

    @property
    def p_A(self) -> float:
        return self.n_hits_A / self.n_paths

    @property
    def p_joint(self) -> float:
        return self.n_joint / self.n_paths

    def row(self) -> dict:
        return {"epsilon": self.epsilon, "n_paths": self.n_paths, "p_A_hat": self.p_A,
                "p_joint_hat": self.p_joint, "cond_hat": self.conditional_estimate,
                "wilson_lo": self.wilson_interval[0], "wilson_hi": self.wilson_interval[1],
                "mean_muQ3_given_A": self.mean_mu_Q3_given_A}


def event_A(summary: QuadrantSummary, epsilon: float) -> np.ndarray:
    """Exact integer test of mu(Q_i) in [eps, 2 eps] for i = 2, 3, 4."""
    c = summary.counts[:, 1:]
    lo = epsilon * summary.n_steps
    hi = 2 * epsilon * summary.n_steps
    return np.all((c >= lo - 1e-9) & (c <= hi + 1e-9), axis=1)


def trial_from_summary(summary: QuadrantSummary, epsilon: float) -> QuadrantTrialResult:
    _check_eps(epsilon, summary.n_steps)
    a = event_A(summary, epsilon)
    n_a = int(a.sum())
    fq = summary.final_q[a]
    n_joint = int(np.sum(fq == 2))
    if n_a == 0:
        return QuadrantTrialResult(epsilon, summary.n_paths, 0, 0, float("nan"), (0.0, 1.0), float("nan"))
    return QuadrantTrialResult(epsilon, summary.n_paths, n_a, n_joint, n_joint / n_a, wilson_interval(n_joint, n_a),
                               float(summary.occupations[a, 2].mean()),
                               int(np.sum(fq == 1)), int(np.sum(fq == 3)))


def _check_eps(epsilon, n_steps):
    if not 0 < epsilon <= 1 / 6:
        raise ConfigurationError(f"epsilon must lie in (0, 1/6], got {epsilon}")
    if n_steps < 64 / epsilon:
        raise ConfigurationError(f"n_steps={n_steps} cannot resolve epsilon={epsilon}; need >= {64 / epsilon:.0f}")


def run_quadrant_trial(epsilon: float, n_paths: int, n_steps: int, stream: RngStreamSpec,
                       threads: int = 1, summary: QuadrantSummary | None = None) -> QuadrantTrialResult:
    _check_eps(epsilon, n_steps)
    if summary is None:
        summary = simulate_quadrant_summaries(n_paths, n_steps, stream.master_seed, threads=threads)
    return trial_from_summary(summary, epsilon)


def reflection_symmetry_verdict(res: QuadrantTrialResult) -> TestVerdict:
    """P(W_1 in Q_2 | A) vs P(W_1 in Q_4 | A): |difference| / SE <= 3."""
    n = res.n_hits_A
    if n == 0:
        return TestVerdict(np.nan, 3.0, 0, False, "no A_eps hits", inconclusive=True)
    p2, p4 = res.n_final_Q2 / n, res.n_final_Q4 / n
    se = np.sqrt(max(p2 + p4 - (p2 - p4) ** 2, 1.0 / n) / n)
    return upper_verdict(abs(p2 - p4) / se, 3.0, n, "Q_2 / Q_4 terminal symmetry given A_eps")


# --- scaling scan ------------------------------------------------------------

@dataclass(frozen=True)
class ScanResult:
    trials: tuple
    excluded: tuple
    slope_A: float
    slope_joint: float
    slope_A_corrected: float
    slope_joint_corrected: float
    fitted_C1: float

    def rows(self) -> list[dict]:
        return [t.row() for t in self.trials]


def _slope(eps, p):
    return float(np.polyfit(np.log(eps), np.log(p), 1)[0])


def scan_from_summary(summary: QuadrantSummary, eps_list) -> ScanResult:
    eps_list = sorted(float(e) for e in eps_list)
    if len(eps_list) < 4:
        raise ConfigurationError("scaling scan needs at least 4 epsilon values")
    trials = tuple(trial_from_summary(summary, e) for e in eps_list)
    fit_a = [t for t in trials if t.n_hits_A > 0]
    fit_j = [t for t in trials if t.n_joint > 0]
    excluded = tuple(t.epsilon for t in trials if t.n_joint == 0)
    nan = float("nan")
    ea = np.array([t.epsilon for t in fit_a])
    ej = np.array([t.epsilon for t in fit_j])
    pa = np.array([t.p_A for t in fit_a])
    pj = np.array([t.p_joint for t in fit_j])
    la = np.log(1 / ea) ** 3
    lj = np.log(1 / ej) ** 3
    s_a = _slope(ea, pa) if len(fit_a) >= 2 else nan
    s_j = _slope(ej, pj) if len(fit_j) >= 2 else nan
    s_ac = _slope(ea, pa / la) if len(fit_a) >= 2 else nan
    s_jc = _slope(ej, pj / lj) if len(fit_j) >= 2 else nan
    c1 = float(np.min(pa / ea)) if len(fit_a) else nan
    return ScanResult(trials, excluded, s_a, s_j, s_ac, s_jc, c1)


def scaling_scan(eps_list, n_paths: int, n_steps: int, stream: RngStreamSpec, threads: int = 1,
                 summary: QuadrantSummary | None = None) -> ScanResult:
    for e in eps_list:
        _check_eps(e, n_steps)
    if summary is None:
        summary = simulate_quadrant_summaries(n_paths, n_steps, stream.master_seed, threads=threads)
    return scan_from_summary(summary, eps_list)


def monotone_trend_verdict(scan: ScanResult) -> TestVerdict:
    """Spearman correlation between eps and the conditional estimate; the
    conditional probability should shrink with eps, so the correlation
    should be positive. Passes when it is at least 0.5."""
    pts = [(t.epsilon, t.conditional_estimate) for t in scan.trials if t.n_hits_A > 0]
    if len(pts) < 3 or len({c for _, c in pts}) < 2:
        return TestVerdict(np.nan, 0.5, len(pts), False, "too few usable epsilons", inconclusive=True)
    rho = spearmanr(*zip(*pts)).statistic
    return upper_verdict(-rho, -0.5, len(pts), "conditional P(Q_3|A_eps) increases with eps (Spearman >= 0.5)")


def min_law_mc_verdicts(summary: QuadrantSummary, deltas=(0.05, 0.1, 0.2), allowance_const: float = 1.0) -> dict:
    """Monte Carlo of the minimum laws from the first coordinate.

    Two checks per delta: |MC - exact| <= 3 SE + C n_steps^{-1/2} for both
    probabilities, and the one-sided bias direction MC(min >= -delta) >=
    exact - SE.
    """
    out = {}
    n = summary.n_paths
    allow = allowance_const / np.sqrt(summary.n_steps)
    for d in deltas:
        e1, e2 = min_law_exact(d)
        ok1 = summary.x_min >= -d
        m1 = float(ok1.mean())
        m2 = float((ok1 & (summary.x_end < 0)).mean())
        se1 = np.sqrt(max(m1 * (1 - m1), 1 / n) / n)
        se2 = np.sqrt(max(m2 * (1 - m2), 1 / n) / n)
        stat = max(abs(m1 - e1) - 3 * se1, abs(m2 - e2) - 3 * se2)
        out[d] = {
            "exact": (e1, e2), "mc": (m1, m2),
            "match": upper_verdict(stat, allow, n, f"min laws at delta={d}"),
            "bias_direction": upper_verdict(e1 - se1 - m1, 0.0, n, "discrete minimum overestimates"),
        }
    return out
