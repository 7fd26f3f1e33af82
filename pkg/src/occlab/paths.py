"""Sample-path generators for Brownian motion and related self-similar processes.

All generators are pure functions of their configuration and an
:class:`~occlab.rng.RngStreamSpec`. Batched variants produce rows that are
bit-identical to the single-path functions for the same replica index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError
from .rng import RngStreamSpec


@dataclass(frozen=True)
class TimeGrid:
    horizon: float = 1.0
    n_steps: int = 1024

    def __post_init__(self):
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise ConfigurationError(f"horizon must be positive, got {self.horizon}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ConfigurationError(f"n_steps must be a positive integer, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @property
    def times(self) -> np.ndarray:
        t = np.arange(self.n_steps + 1) * self.dt
        t[-1] = self.horizon
        return t

    def index_of(self, t) -> np.ndarray:
        """Grid index k of the step [t_k, t_{k+1}) containing time ``t``."""
        k = np.floor(np.asarray(t, dtype=float) / self.dt).astype(np.int64)
        return np.clip(k, 0, self.n_steps - 1)


@dataclass(frozen=True, eq=False)
class SamplePath:
    grid: TimeGrid
    dim: int
    points: np.ndarray  # (n_steps + 1, dim)

    @property
    def endpoint(self) -> np.ndarray:
        return self.points[-1]

    @property
    def resolution(self) -> float:
        """Largest Euclidean step between consecutive grid points."""
        if len(self.points) < 2:
            return 0.0
        return float(np.max(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))


@dataclass(frozen=True, eq=False)
class SpherePath:
    grid: TimeGrid
    directions: np.ndarray  # (n_steps + 1, dim), unit rows

    @property
    def dim(self) -> int:
        return self.directions.shape[1]


@dataclass(frozen=True, eq=False)
class AngleProcess:
    """Piecewise-constant angle process with a separate zero-set mask.

    ``segments`` optionally records the exact interval partition
    (start, end, angle) when the construction is continuous in time.
    """

    grid: TimeGrid
    angles: np.ndarray
    zero_set_mask: np.ndarray
    segments: np.ndarray | None = None
    step_angles: np.ndarray | None = None

    def values(self) -> np.ndarray:
        """Angles with the zero set marked as NaN, for indicator arithmetic."""
        return np.where(self.zero_set_mask, np.nan, self.angles)

    def angle_at(self, t) -> np.ndarray:
        """Angle of the excursion in progress at time(s) ``t`` in (0, horizon].

        Zero-set times have Lebesgue measure zero, so uniform sampling times
        read the angle of the interval or grid step containing them.
        """
        t = np.asarray(t, dtype=float)
        if self.segments is not None:
            ends = self.segments[:, 1]
            k = np.clip(np.searchsorted(ends, t, side="left"), 0, len(ends) - 1)
            return self.segments[k, 2]
        if self.step_angles is not None:
            return self.step_angles[self.grid.index_of(t)]
        return self.angles[np.clip(self.grid.index_of(t) + 1, 0, self.grid.n_steps)]

    def occupation(self, predicate) -> float:
        """Fraction of time spent in the angle set ``predicate``."""
        if self.segments is not None:
            seg = self.segments
            return float(np.sum((seg[:, 1] - seg[:, 0]) * predicate(seg[:, 2])) / self.grid.horizon)
        if self.step_angles is not None:
            return float(np.mean(predicate(self.step_angles)))
        return float(np.mean(predicate(self.angles[1:])))


def _check_dim(dim):
    if int(dim) != dim or dim < 1:
        raise ConfigurationError(f"dim must be a positive integer, got {dim}")


def brownian_increments(dim: int, grid: TimeGrid, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((grid.n_steps, dim)) * np.sqrt(grid.dt)


def brownian_batch(dim: int, grid: TimeGrid, master_seed: int, replicas: Sequence[int]) -> np.ndarray:
    """Positions of several independent paths, shape ``(len(replicas), n_steps + 1, dim)``."""
    _check_dim(dim)
    out = np.zeros((len(replicas), grid.n_steps + 1, dim))
    for row, r in enumerate(replicas):
        rng = RngStreamSpec(master_seed, r).generator()
        out[row, 1:] = brownian_increments(dim, grid, rng)
    np.cumsum(out[:, 1:], axis=1, out=out[:, 1:])
    return out


def simulate_bm(dim: int, grid: TimeGrid, stream: RngStreamSpec) -> SamplePath:
    _check_dim(dim)
    pts = np.zeros((grid.n_steps + 1, dim))
    pts[1:] = brownian_increments(dim, grid, stream.generator())
    np.cumsum(pts[1:], axis=0, out=pts[1:])
    return SamplePath(grid, int(dim), pts)


def spherical_project(path: SamplePath, zero_convention=None) -> SpherePath:
    """Radial projection onto the unit sphere; the origin maps to ``zero_convention``.

    The default convention is the first standard basis vector.
    """
    d = path.dim
    if zero_convention is None:
        zero_convention = np.eye(d)[0]
    zero_convention = np.asarray(zero_convention, dtype=float)
    if zero_convention.shape != (d,) or abs(np.linalg.norm(zero_convention) - 1) > 1e-12:
        raise ConfigurationError("zero_convention must be a unit vector of the path dimension")
    return SpherePath(path.grid, project_points(path.points, zero_convention))


def project_points(points: np.ndarray, zero_convention: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(points, axis=-1, keepdims=True)
    safe = np.where(r > 0, r, 1.0)
    return np.where(r > 0, points / safe, zero_convention)


# --- perturbed Brownian motion ------------------------------------------------

def perturbed_from_bm(b: np.ndarray, mu: float) -> np.ndarray:
    """Y = (1 - mu) * M - B along the last axis, M the running maximum of B.

    Equal in law to |B| - mu * (local time at 0) by Levy's theorem.
    """
    m = np.maximum.accumulate(b, axis=-1)
    return (1.0 - mu) * m - b


def simulate_perturbed_bm(mu: float, grid: TimeGrid, stream: RngStreamSpec) -> SamplePath:
    if not mu > 0:
        raise ConfigurationError(f"mu must be positive, got {mu}")
    b = simulate_bm(1, grid, stream).points[:, 0]
    return SamplePath(grid, 1, perturbed_from_bm(b, mu)[:, None])


# --- angle laws and Walsh's Brownian motion ----------------------------------

@dataclass(frozen=True, eq=False)
class DiscreteAngleLaw:
    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if v.shape != p.shape or v.ndim != 1 or len(v) == 0:
            raise ConfigurationError("values and probs must be 1-d arrays of equal length")
        if np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
            raise ConfigurationError("angle law probabilities must be nonnegative and sum to 1")
        if np.any((v < 0) | (v >= 2 * np.pi)):
            raise ConfigurationError("angles must lie in [0, 2*pi)")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", p)

    @classmethod
    def equiprobable(cls, k: int) -> "DiscreteAngleLaw":
        return cls(2 * np.pi * np.arange(k) / k, np.full(k, 1.0 / k))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        idx = rng.choice(len(self.values), size=size, p=self.probs)
        return self.values[idx]

    def contains(self, x) -> np.ndarray:
        return np.isin(x, self.values)

    def category(self, x) -> np.ndarray:
        """Index of each angle among ``values``; -1 for anything else (NaN included)."""
        x = np.asarray(x)
        order = np.argsort(self.values)
        pos = np.clip(np.searchsorted(self.values[order], x), 0, len(order) - 1)
        hit = self.values[order][pos] == x
        return np.where(hit, order[pos], -1)


@dataclass(frozen=True)
class UniformAngleLaw:
    low: float = 0.0
    high: float = 2 * np.pi

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x)
        return (x >= self.low) & (x < self.high)


def walsh_from_bm(b: np.ndarray, run_angles: np.ndarray):
    """Assign angles to the sign-runs of a discrete 1-d path ``b`` (b[0] = 0).

    Returns (angles, mask, step_angles). The first grid point of every new
    run, and t=0, are flagged as zero-set points and carry angle 0.
    ``step_angles[k]`` is the run angle of the step (t_k, t_{k+1}].
    """
    s = b[1:] >= 0
    change = np.concatenate([[False], s[1:] != s[:-1]])
    run_id = np.cumsum(change)
    step_angles = run_angles[run_id]
    angles = np.zeros(len(b))
    angles[1:] = step_angles
    mask = np.concatenate([[True], change])
    angles[mask] = 0.0
    return angles, mask, step_angles


def count_runs(b: np.ndarray) -> int:
    s = b[1:] >= 0
    return int(np.count_nonzero(s[1:] != s[:-1])) + 1


def simulate_walsh_angles(grid: TimeGrid, angle_law, stream: RngStreamSpec) -> AngleProcess:
    rng = stream.generator()
    b = np.zeros(grid.n_steps + 1)
    b[1:] = np.cumsum(brownian_increments(1, grid, rng)[:, 0])
    run_angles = angle_law.sample(rng, count_runs(b))
    angles, mask, steps = walsh_from_bm(b, run_angles)
    return AngleProcess(grid, angles, mask, step_angles=steps)


# --- stable Levy processes ---------------------------------------------------

def _check_stable(alpha, beta_skew):
    if not (0 < alpha <= 2):
        raise ConfigurationError(f"alpha must lie in (0, 2], got {alpha}")
    if not (-1 <= beta_skew <= 1):
        raise ConfigurationError(f"beta_skew must lie in [-1, 1], got {beta_skew}")
    if alpha == 1 and beta_skew != 0:
        raise ConfigurationError("alpha = 1 requires beta_skew = 0 (otherwise not strictly stable)")


def positivity_parameter(alpha: float, beta_skew: float) -> float:
    """P(Y_t > 0) for the strictly stable law with char. exponent
    |u|^alpha (1 - i beta sgn(u) tan(pi alpha / 2))."""
    _check_stable(alpha, beta_skew)
    if alpha == 1:
        return 0.5
    return 0.5 + np.arctan(beta_skew * np.tan(np.pi * alpha / 2)) / (np.pi * alpha)


def stable_variates(alpha: float, beta_skew: float, size, rng: np.random.Generator) -> np.ndarray:
    """Chambers-Mallows-Stuck transform, unit scale; alpha = 2 gives variance 2."""
    _check_stable(alpha, beta_skew)
    v = rng.uniform(-np.pi / 2, np.pi / 2, size)
    w = rng.standard_exponential(size)
    if alpha == 1:
        return np.tan(v)
    zeta = beta_skew * np.tan(np.pi * alpha / 2)
    b = np.arctan(zeta) / alpha
    s = (1 + zeta**2) ** (1 / (2 * alpha))
    av = alpha * (v + b)
    return s * np.sin(av) / np.cos(v) ** (1 / alpha) * (np.cos(v - av) / w) ** ((1 - alpha) / alpha)


def simulate_stable_levy(alpha: float, beta_skew: float, grid: TimeGrid, stream: RngStreamSpec) -> SamplePath:
    _check_stable(alpha, beta_skew)
    rng = stream.generator()
    inc = stable_variates(alpha, beta_skew, grid.n_steps, rng) * grid.dt ** (1 / alpha)
    pts = np.zeros((grid.n_steps + 1, 1))
    pts[1:, 0] = np.cumsum(inc)
    return SamplePath(grid, 1, pts)


# --- Dirichlet angle process ------------------------------------------------

def stick_breaking_breaks(theta: float, rng: np.random.Generator, min_length: float) -> np.ndarray:
    """Decreasing break points 1 = R_0 > R_1 > ... > R_K > 0.

    Interval i is (R_i, R_{i-1}]. Lengths follow the residual allocation
    scheme with Beta(1, theta) fractions, which matches the ordered gaps of a
    Poisson process with intensity theta/x seen backwards from t = 1.
    Breaking stops once the remaining stick is shorter than ``min_length``.
    """
    breaks = [1.0]
    r = 1.0
    while r >= min_length:
        r = r * (1.0 - rng.beta(1.0, theta))
        breaks.append(r)
    return np.array(breaks)


def simulate_dirichlet_angle_process(theta: float, angle_law, stream: RngStreamSpec,
                                     grid: TimeGrid | None = None) -> AngleProcess:
    if not theta > 0:
        raise ConfigurationError(f"theta must be positive, got {theta}")
    grid = grid or TimeGrid(1.0, 2**14)
    rng = stream.generator()
    r = stick_breaking_breaks(theta, rng, grid.dt)
    # intervals (r[i+1], r[i]] plus the truncated remainder (0, r[-1]]
    ends = r
    starts = np.append(r[1:], 0.0)
    seg_angles = angle_law.sample(rng, len(ends))
    segments = np.column_stack([starts, ends, seg_angles])[::-1]

    t = grid.times
    # t in (start, end]  <=> index of first end >= t, in increasing order
    inc_ends = segments[:, 1]
    idx = np.clip(np.searchsorted(inc_ends, t, side="left"), 0, len(inc_ends) - 1)
    angles = segments[idx, 2].copy()
    mask = np.isin(t, np.append(segments[:, 0], 0.0))
    angles[mask] = 0.0
    return AngleProcess(grid, angles, mask, segments)


def segment_occupation(process: AngleProcess, predicate) -> float:
    """Exact time spent by a segment-defined process in the angle set ``predicate``."""
    if process.segments is None:
        raise DomainError("process has no exact segment representation")
    return process.occupation(predicate)


# --- excursion counting ------------------------------------------------------

def excursion_count_process(zero_set, t: float) -> int:
    """N_t: one plus the number of gaps of [0, t] minus the zero set that are
    strictly longer than the current gap t - G_t."""
    z = np.sort(np.asarray(zero_set, dtype=float))
    if len(z) == 0 or z[0] != 0.0 or z[-1] > 1.0:
        raise DomainError("zero_set must lie in [0, 1] and contain 0")
    if not (0 < t <= 1):
        raise DomainError(f"t must lie in (0, 1], got {t}")
    before = z[z < t]
    g = before[-1]
    gaps = np.diff(np.append(before, t))
    return 1 + int(np.count_nonzero(gaps > t - g))
