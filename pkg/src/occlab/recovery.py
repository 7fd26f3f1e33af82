"""Recovering the range and the endpoint of a path from its projected
occupation measure, plus the planar thick-point statistic."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from .cover import CoverHierarchy, build_cover
from .errors import ConfigurationError, DomainError, UnreliableInputError
from .occupation import Cap, OccupationMeasure, cap_masses
from .topology import (PointCloud, choose_endpoint, cut_times_oracle, endpoint_candidates_phi,
                       hausdorff_distance, hausdorff_limsup, point_diameter)

R_MIN_CONST = 4.0


@dataclass(frozen=True, eq=False)
class RhoEstimate:
    cap: Cap
    value: float
    profile: tuple   # ((r, best normalized mass), ...) with r decreasing


@dataclass(frozen=True, eq=False)
class RecoveryReport:
    psi_cloud: PointCloud
    endpoint_estimate: np.ndarray | None
    hausdorff_to_truth: float | None = None
    endpoint_error: float | None = None
    parameters: dict = field(default_factory=dict)
    n_tied: int = 0
    inconclusive: bool = False


def r_min_for(mu: OccupationMeasure, const: float = R_MIN_CONST) -> float:
    """Smallest usable cap radius: const * sqrt(time step) of the measure."""
    dt = mu.metadata.get("horizon", 1.0) / mu.metadata["n_steps"] if "n_steps" in mu.metadata else (
        mu.uniform_weight or float(np.min(mu.weights[mu.weights > 0])))
    return const * np.sqrt(dt)


def dyadic_radii(r_max: float, r_min: float) -> np.ndarray:
    """Radii 2^-k with r_min <= 2^-k <= r_max, decreasing."""
    k0 = int(np.ceil(-np.log2(r_max) - 1e-12))
    k1 = int(np.floor(-np.log2(r_min) + 1e-12))
    return 2.0 ** -np.arange(k0, k1 + 1)


def normalizer(r, dim: int, const_high_dim: float = 1.0):
    """Thick-point scale: 2 r^2 log^2 r for d = 3, const r^2 |log r| above."""
    r = np.asarray(r, dtype=float)
    if dim == 3:
        return 2 * r**2 * np.log(r) ** 2
    return const_high_dim * r**2 * np.abs(np.log(r))


def _check_schedule(radii, r_min):
    radii = np.asarray(radii, dtype=float)
    if len(radii) == 0:
        raise ConfigurationError("empty radius schedule")
    if np.any(np.diff(radii) >= 0):
        raise ConfigurationError("radius schedule must be strictly decreasing")
    if radii.min() < r_min * (1 - 1e-12):
        raise UnreliableInputError(f"radius {radii.min():.4g} below r_min={r_min:.4g}")
    return radii




def _subcap_ratios(mu: OccupationMeasure, cover: CoverHierarchy, r: float, dim: int, const_high_dim: float):
    """Normalized mass of the caps of radius r centred at cover points of
    spacing <= r/2 (cover level ceil(log2 1/r))."""
    k = int(np.ceil(-np.log2(r) - 1e-12))
    if k > cover.j_max:
        raise ConfigurationError(f"radius {r} needs cover level {k} > j_max={cover.j_max}")
    g = cover.centers(k)
    return g, cap_masses(mu, g, r) / normalizer(r, dim, const_high_dim)


def rho_estimate(mu: OccupationMeasure, cap: Cap, radii=None, dim: int | None = None,
                 cover: CoverHierarchy | None = None, const_high_dim: float = 1.0,
                 r_min_const: float = R_MIN_CONST) -> RhoEstimate:
    """sqrt of the largest normalized mass mu(D')/(2 r^2 log^2 r) over
    sub-caps D' of ``cap`` with radius r in the schedule."""
    dim = dim or mu.dim
    if dim < 3:
        raise DomainError("rho estimate needs dim >= 3")
    r_min = r_min_for(mu, r_min_const)
    if radii is None:
        radii = dyadic_radii(min(cap.radius, 2.0 ** -4), r_min)
    radii = _check_schedule(radii, r_min)
    if radii.max() > cap.radius * (1 + 1e-12):
        raise ConfigurationError("sub-cap radius exceeds the cap radius")
    cover = cover or build_cover(dim, int(np.ceil(-np.log2(radii.min()) - 1e-12)))
    c = np.asarray(cap.center)
    profile = []
    best = 0.0
    for r in radii:
        g, ratio = _subcap_ratios(mu, cover, r, dim, const_high_dim)
        inside = np.linalg.norm(g - c, axis=1) <= cap.radius - r + 1e-12
        m = float(ratio[inside].max()) if inside.any() else 0.0
        profile.append((float(r), m))
        best = max(best, m)
    return RhoEstimate(cap, float(np.sqrt(best)), tuple(profile))


def rho_level(mu: OccupationMeasure, cover: CoverHierarchy, j: int, radii=None,
              const_high_dim: float = 1.0, r_min_const: float = R_MIN_CONST) -> np.ndarray:
    """rho estimates for every cap of cover level j (cover index order)."""
    dim = mu.dim
    if dim < 3:
        raise DomainError("rho estimate needs dim >= 3")
    R = cover.radius(j)
    r_min = r_min_for(mu, r_min_const)
    if radii is None:
        radii = dyadic_radii(min(R, 2.0 ** -4), r_min)
    radii = _check_schedule(radii, r_min)
    centers = cover.centers(j)
    best = np.zeros(len(centers))
    for r in radii[radii <= R * (1 + 1e-12)]:
        g, ratio = _subcap_ratios(mu, cover, r, dim, const_high_dim)
        pos = ratio > 0
        if not pos.any():
            continue
        tree = cKDTree(g[pos])
        vals = ratio[pos]
        for i, nb in enumerate(tree.query_ball_point(centers, R - r + 1e-12)):
            if nb:
                best[i] = max(best[i], vals[nb].max())
    return np.sqrt(best)


def reconstruct_range_psi(mu: OccupationMeasure, cover: CoverHierarchy, j_range, radii=None,
                          tol_factor: float = 2.0, const_high_dim: float = 1.0,
                          r_min_const: float = R_MIN_CONST) -> PointCloud:
    """Tail intersection of A_j = {rho_D Cen(D)} over the cover levels in
    ``j_range``; tolerance tol_factor * 2^-j_min times the largest rho."""
    levels = sorted(j_range)
    sets, scale = [], 0.0
    for j in levels:
        rho = rho_level(mu, cover, j, radii, const_high_dim, r_min_const)
        sets.append(rho[:, None] * cover.centers(j))
        scale = max(scale, float(rho.max()))
    if scale == 0:
        return PointCloud(np.zeros((0, mu.dim)), 0.0, {"inconclusive": True, "levels": levels})
    tol = tol_factor * 2.0 ** -levels[0] * scale
    psi = hausdorff_limsup(sets, 0, tol)
    return PointCloud(psi.points, 0.0, {"levels": levels, "tol": tol, "inconclusive": len(psi) == 0})


def cloud_resolution(points: np.ndarray, quantile: float = 0.95) -> float:
    """Gap scale of an unordered cloud: a high quantile of nearest-neighbour
    distances (the maximum is set by isolated points)."""
    if len(points) < 2:
        return 0.0
    d, _ = cKDTree(points).query(points, k=2)
    return float(np.quantile(d[:, 1], quantile))


def recover_endpoint(mu: OccupationMeasure, cover: CoverHierarchy, j_range, delta_schedule=None,
                     j_cut: int | None = None, truth_range: np.ndarray | None = None,
                     truth_endpoint: np.ndarray | None = None, radii=None,
                     const_high_dim: float = 1.0) -> RecoveryReport:
    """psi-cloud from the measure, then the endpoint candidate of phi on it."""
    psi = reconstruct_range_psi(mu, cover, j_range, radii, const_high_dim=const_high_dim)
    params = {"j_range": list(j_range), "delta_schedule": None, "j_cut": j_cut}
    endpoint, n_tied, inconclusive = None, 0, True
    if len(psi) > 1:
        res = cloud_resolution(psi.points)
        cloud = PointCloud(psi.points, res)
        diam = cloud.diameter
        sched = delta_schedule
        if sched is None:
            sched = [d for d in diam * np.array([0.2, 0.1, 0.05]) if d > 4 * res] or [4.01 * res]
        j_cut = j_cut if j_cut is not None else _cut_level(cloud)
        params.update(delta_schedule=[float(x) for x in sched], j_cut=j_cut, psi_resolution=res)
        try:
            phi = endpoint_candidates_phi(cloud, sched, j_cut)
            endpoint, n_tied = choose_endpoint(phi)
            inconclusive = phi.inconclusive
        except UnreliableInputError:
            endpoint = None
    h = e = None
    if truth_range is not None and len(psi):
        h = hausdorff_distance(psi.points, truth_range)
    if truth_endpoint is not None and endpoint is not None:
        e = float(np.linalg.norm(endpoint - truth_endpoint))
    return RecoveryReport(psi, endpoint, h, e, params, n_tied, inconclusive or endpoint is None)


def _cut_level(cloud: PointCloud, fine_gap: int = 2) -> int:
    """Coarsest-safe query level: fine balls (level j + fine_gap) keep radius
    >= 4 x resolution."""
    R = float(np.max(np.linalg.norm(cloud.points, axis=1)))
    jf = int(np.floor(np.log2(R / (4 * cloud.resolution)))) if cloud.resolution > 0 else 8
    return max(1, jf - fine_gap)


# --- oracle pipeline on the true range ------------------------------------------

def geodesic_hops(points: np.ndarray, link: float, source: np.ndarray) -> np.ndarray:
    """Hop distance from the ``source`` points in the graph linking points
    within ``link``."""
    pairs = cKDTree(points).query_pairs(link, output_type="ndarray")
    n = len(points)
    g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n)).tocsr()
    d = dijkstra(g, directed=False, indices=np.flatnonzero(source), unweighted=True, min_only=True)
    return d


def oracle_endpoint(path_points: np.ndarray, gap_tol: float | None = None, origin_radius: float | None = None):
    """Endpoint from the true range with oracle cut points: the cut point
    farthest from the origin in hops along the range.

    Returns (estimate, cut indices)."""
    pts = np.asarray(path_points, dtype=float)
    res = float(np.linalg.norm(np.diff(pts, axis=0), axis=1).max())
    gap_tol = 1.05 * res if gap_tol is None else gap_tol
    origin_radius = 4 * res if origin_radius is None else origin_radius
    idx = cut_times_oracle(pts, gap_tol)
    idx = idx[np.linalg.norm(pts[idx], axis=1) > origin_radius]
    if len(idx) == 0:
        return None, idx
    hops = geodesic_hops(pts, res, np.linalg.norm(pts, axis=1) <= origin_radius)
    h = hops[idx]
    tied = idx[h == h.max()]
    order = np.lexsort(pts[tied].T[::-1])
    return pts[tied[order[0]]], idx


def phi_on_range(path_points: np.ndarray, max_gap: float, delta_schedule=None, j_cut: int | None = None):
    """Set-only endpoint extraction on the (densified) true range."""
    cloud = PointCloud.from_path(path_points, max_gap)
    diam = cloud.diameter
    if delta_schedule is None:
        delta_schedule = [d for d in diam * np.array([0.1, 0.05, 0.025]) if d > 4 * cloud.resolution]
    j_cut = j_cut if j_cut is not None else _cut_level(cloud)
    phi = endpoint_candidates_phi(cloud, delta_schedule, j_cut)
    return choose_endpoint(phi)[0], phi


# --- planar thick points ------------------------------------------------------

def thick_points_statistic(points: np.ndarray, weights, radii) -> float:
    """sup over discs D of occupation(D) / (r^2 log^2 r), r in ``radii``.

    Disc centres run over the lattice of spacing r/2 at sites nearest to the
    atoms (discs missing all atoms have zero occupation).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DomainError("thick-point statistic is planar")
    w = np.broadcast_to(np.asarray(weights, dtype=float), (len(pts),))
    tree = cKDTree(pts)
    best = 0.0
    for r in np.asarray(radii, dtype=float):
        if not 0 < r < 1:
            raise ConfigurationError("radii must lie in (0, 1)")
        h = r / 2
        centers = np.unique(np.rint(pts / h), axis=0) * h
        if np.all(w == w[0]):
            occ = w[0] * tree.query_ball_point(centers, r, return_length=True)
        else:
            occ = np.array([w[nb].sum() for nb in tree.query_ball_point(centers, r)])
        best = max(best, float(occ.max()) / (r**2 * np.log(r) ** 2))
    return best


def thick_profile(points, weights, radii) -> list[tuple[float, float]]:
    """Per-radius maxima of the thick-point ratio."""
    return [(float(r), thick_points_statistic(points, weights, [r])) for r in radii]
