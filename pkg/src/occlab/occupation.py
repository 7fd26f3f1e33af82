"""Projected occupation measures, cap queries, quadrant times and binned
conditional curves."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from .cover import CoverHierarchy, build_cover  # noqa: F401  (re-exported)
from .errors import DomainError, ConfigurationError
from .paths import SamplePath, SpherePath, project_points, spherical_project


@dataclass(frozen=True, eq=False)
class OccupationMeasure:
    """Atomic probability measure on S^{d-1}: rows of ``directions`` carry ``weights``."""

    directions: np.ndarray
    weights: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.directions, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if d.ndim != 2 or len(d) != len(w) or len(w) == 0:
            raise DomainError("directions must be (m, d) with one weight per row, m >= 1")
        if np.any(w < 0):
            raise DomainError("weights must be nonnegative")
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    @property
    def total(self) -> float:
        return float(np.sum(self.weights))

    @cached_property
    def uniform_weight(self) -> float | None:
        w = self.weights
        return float(w[0]) if np.all(w == w[0]) else None

    @cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.directions)


@dataclass(frozen=True)
class Cap:
    center: tuple
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if abs(np.linalg.norm(c) - 1) > 1e-9:
            raise DomainError("cap center must be a unit vector")
        if not 0 < self.radius <= 2:
            raise DomainError(f"cap radius must lie in (0, 2], got {self.radius}")
        object.__setattr__(self, "center", tuple(float(x) for x in c))

    def contains(self, directions: np.ndarray) -> np.ndarray:
        return np.linalg.norm(np.asarray(directions) - np.asarray(self.center), axis=-1) <= self.radius


def occupation_measure(path, rule: str = "left", zero_convention=None) -> OccupationMeasure:
    """Time-fraction measure of the projected path.

    ``rule='left'`` puts one atom of weight 1/n at each of directions[0..n-1].
    ``rule='midpoint'`` projects the chord midpoints instead and needs the
    unprojected :class:`SamplePath`.
    """
    if rule == "left":
        sp = path if isinstance(path, SpherePath) else spherical_project(path, zero_convention)
        n = sp.grid.n_steps
        dirs = sp.directions[:n]
        grid = sp.grid
    elif rule == "midpoint":
        if not isinstance(path, SamplePath):
            raise ConfigurationError("midpoint rule needs the unprojected SamplePath")
        n = path.grid.n_steps
        mid = 0.5 * (path.points[:-1] + path.points[1:])
        zc = np.eye(path.dim)[0] if zero_convention is None else np.asarray(zero_convention, float)
        dirs = project_points(mid, zc)
        grid = path.grid
    else:
        raise ConfigurationError(f"unknown quadrature rule {rule!r}")
    w = np.full(n, 1.0 / n)
    return OccupationMeasure(dirs, w, {"n_steps": grid.n_steps, "horizon": grid.horizon, "rule": rule})


def cap_mass(mu: OccupationMeasure, cap: Cap) -> float:
    return float(np.sum(mu.weights[cap.contains(mu.directions)]))


def cap_masses(mu: OccupationMeasure, centers: np.ndarray, radius: float) -> np.ndarray:
    """Masses of the caps of one radius at many centres."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    # the tree query is inclusive up to floating point; nudge so that atoms
    # exactly on the boundary count, matching Cap.contains
    r = radius * (1 + 1e-12)
    if mu.uniform_weight is not None:
        counts = mu.tree.query_ball_point(centers, r, return_length=True)
        return np.asarray(counts, dtype=float) * mu.uniform_weight
    lists = mu.tree.query_ball_point(centers, r)
    return np.array([mu.weights[ix].sum() for ix in lists])


def quadrant_index(x, y) -> np.ndarray:
    """Quadrant labels 0..3 for Q_1..Q_4, ordered clockwise from Q_1 = {x>=0, y>0}.

    Half-open boundaries make the four sets partition the plane minus the
    origin; the origin itself goes to Q_1.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    q = np.full(np.broadcast(x, y).shape, 3, dtype=np.int8)
    q[(x <= 0) & (y < 0)] = 2
    q[(x > 0) & (y <= 0)] = 1
    q[((x >= 0) & (y > 0)) | ((x == 0) & (y == 0))] = 0
    return q


def quadrant_occupations(path: SamplePath) -> np.ndarray:
    """(mu(Q_1), ..., mu(Q_4)) with left-endpoint weights."""
    if path.dim != 2:
        raise DomainError(f"quadrant occupations need a planar path, got dim={path.dim}")
    pts = path.points[:-1]
    q = quadrant_index(pts[:, 0], pts[:, 1])
    return np.bincount(q, minlength=4) / len(q)


def quadrant_occupations_batch(points: np.ndarray) -> np.ndarray:
    """Same as :func:`quadrant_occupations` for stacked paths ``(B, n+1, 2)``."""
    q = quadrant_index(points[:, :-1, 0], points[:, :-1, 1])
    n = q.shape[1]
    return np.stack([(q == k).sum(axis=1) for k in range(4)], axis=1) / n


@dataclass(frozen=True, eq=False)
class BinnedCurve:
    edges: np.ndarray
    centers: np.ndarray
    counts: np.ndarray
    mean_value: np.ndarray   # mean of mu(B) within the bin
    mean_hit: np.ndarray
    se: np.ndarray

    def occupied(self, min_count: int = 100) -> np.ndarray:
        return self.counts >= min_count


def conditional_given_cap_mass(values, hits, n_bins: int = 20, edges=None) -> BinnedCurve:
    """Bin replicas by mu(B) and average the hit indicator within each bin.

    The standard error uses the binomial variance at the bin mean, floored at
    one pseudo-failure so that a bin of all-ones still reports a positive SE.
    """
    v = np.asarray(values, dtype=float).ravel()
    h = np.asarray(hits, dtype=float).ravel()
    if len(v) == 0:
        raise DomainError("no replicas supplied")
    if len(v) != len(h):
        raise DomainError("values and hits differ in length")
    if edges is None:
        edges = np.linspace(0.0, 1.0, n_bins + 1)
    edges = np.asarray(edges, dtype=float)
    k = np.clip(np.searchsorted(edges, v, side="right") - 1, 0, len(edges) - 2)
    nb = len(edges) - 1
    counts = np.bincount(k, minlength=nb)
    with np.errstate(invalid="ignore", divide="ignore"):
        mv = np.bincount(k, weights=v, minlength=nb) / counts
        mh = np.bincount(k, weights=h, minlength=nb) / counts
        p = np.clip(mh, 1.0 / (counts + 1), 1 - 1.0 / (counts + 1))
        se = np.sqrt(p * (1 - p) / counts)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return BinnedCurve(edges, centers, counts, mv, mh, se)
