"""Finite point-cloud versions of the set machinery used for endpoint recovery:
Hausdorff distance and limsup, component counts N_delta through nested ball
covers, delta-cutpoints and the endpoint candidates phi.

Ambient covers are nested cubic lattices. At level j the lattice spacing is
2^-j R / sqrt(d), where R is the radius of the ball (about the origin)
holding the cloud, so every point of that ball lies within 2^-(j+1) R of a
lattice point; BALLS_j are the balls of radius 2^-j R at lattice points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np
from numba import njit
from scipy.spatial import ConvexHull, cKDTree
from scipy.spatial import QhullError

from .errors import ConfigurationError, DomainError, UnreliableInputError


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    resolution: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim == 1:
            p = p[None, :] if p.size else p.reshape(0, 1)
        object.__setattr__(self, "points", p)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)

    @property
    def diameter(self) -> float:
        return point_diameter(self.points)

    @classmethod
    def from_path(cls, points: np.ndarray, max_gap: float | None = None) -> "PointCloud":
        """Cloud of a discrete path; with ``max_gap`` the polyline is densified
        so consecutive samples are at most ``max_gap`` apart."""
        pts = np.asarray(points, dtype=float)
        if max_gap is not None and len(pts) > 1:
            pts = densify_polyline(pts, max_gap)
        gaps = np.linalg.norm(np.diff(pts, axis=0), axis=1) if len(pts) > 1 else np.zeros(1)
        return cls(pts, float(gaps.max()))


def densify_polyline(points: np.ndarray, max_gap: float) -> np.ndarray:
    seg = np.diff(points, axis=0)
    k = np.maximum(1, np.ceil(np.linalg.norm(seg, axis=1) / max_gap).astype(np.int64))
    idx = np.repeat(np.arange(len(seg)), k)
    frac = np.concatenate([np.arange(m) / m for m in k]) if len(k) < 1000 else _fractions(k)
    out = points[idx] + frac[:, None] * seg[idx]
    return np.vstack([out, points[-1:]])


def _fractions(k):
    start = np.repeat(np.cumsum(k) - k, k)
    return (np.arange(k.sum()) - start) / np.repeat(k, k)


def _as_points(S) -> np.ndarray:
    return S.points if isinstance(S, PointCloud) else np.atleast_2d(np.asarray(S, dtype=float))


# --- distances ----------------------------------------------------------------

def hausdorff_distance(S, T) -> float:
    a, b = _as_points(S), _as_points(T)
    if len(a) == 0 or len(b) == 0:
        raise DomainError("Hausdorff distance needs two nonempty clouds")
    return float(max(cKDTree(b).query(a)[0].max(), cKDTree(a).query(b)[0].max()))


def directed_distances(S, T) -> np.ndarray:
    """Distance from each point of S to the cloud T."""
    return cKDTree(_as_points(T)).query(_as_points(S))[0]


def hausdorff_limsup(sets, tail_start: int = 0, tol: float = 0.0) -> PointCloud:
    """Points of the tail sets lying within ``tol`` of every set with index
    >= ``tail_start`` (finite stand-in for the Hausdorff limsup)."""
    sets = [_as_points(s) for s in sets]
    if len(sets) <= tail_start:
        raise ConfigurationError("sequence must be longer than tail_start")
    tail = [s for s in sets[tail_start:]]
    dim = next((s.shape[1] for s in tail if s.size), 1)
    if any(len(s) == 0 for s in tail):
        return PointCloud(np.empty((0, dim)))
    cand = np.unique(np.vstack(tail), axis=0)
    keep = np.ones(len(cand), bool)
    for s in tail:
        keep &= cKDTree(s).query(cand)[0] <= tol + 1e-12
    return PointCloud(cand[keep])


def point_diameter(points: np.ndarray) -> float:
    p = np.asarray(points, dtype=float)
    if len(p) < 2:
        return 0.0
    if len(p) > 64 and p.shape[1] >= 2:
        try:
            p = p[ConvexHull(p).vertices]
        except (QhullError, ValueError):
            p = _extreme_subset(p)
    if len(p) > 4000:
        p = _extreme_subset(p)
    best = 0.0
    for i in range(0, len(p), 512):
        d = np.linalg.norm(p[i:i + 512, None, :] - p[None, :, :], axis=-1)
        best = max(best, float(d.max()))
    return best


def _extreme_subset(p):
    # degenerate (flat) clouds: project onto the principal axis, which for a
    # collinear set contains the diameter pair
    c = p - p.mean(axis=0)
    _, _, vt = np.linalg.svd(c, full_matrices=False)
    proj = c @ vt[0]
    return p[[int(np.argmin(proj)), int(np.argmax(proj))]] if np.ptp(c @ vt[-1]) < 1e-12 else p


# --- union-find oracle ----------------------------------------------------------

def brute_components(S, link_radius: float):
    """Connected components of the graph joining points within ``link_radius``.

    Returns (count, labels) with labels numbered by smallest point index.
    """
    pts = _as_points(S)
    if not link_radius > 0:
        raise ConfigurationError("link_radius must be positive")
    n = len(pts)
    parent = np.arange(n)

    def find(i):
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    for i, j in cKDTree(pts).query_pairs(link_radius, output_type="ndarray"):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    roots = np.array([find(i) for i in range(n)])
    _, labels = np.unique(roots, return_inverse=True)
    return int(labels.max() + 1) if n else 0, labels


# --- lattice covers --------------------------------------------------------------

@dataclass(frozen=True)
class LatticeCover:
    """Nested cubic lattices covering the ball of radius ``scale``."""

    dim: int
    scale: float

    def radius(self, j: int) -> float:
        return 2.0 ** -j * self.scale

    def spacing(self, j: int) -> float:
        return self.radius(j) / np.sqrt(self.dim)

    def base(self, j: int) -> int:
        return int(2 * (np.ceil(2.0 ** j * np.sqrt(self.dim)) + 8))

    def keys(self, coords: np.ndarray, j: int) -> np.ndarray:
        m = self.base(j)
        if m ** self.dim >= 2**62:
            raise ConfigurationError(f"level {j} too deep for integer ball keys in dimension {self.dim}")
        w = m ** np.arange(self.dim, dtype=np.int64)
        return (coords + m // 2) @ w

    def nearest(self, points: np.ndarray, j: int) -> np.ndarray:
        return np.rint(points / self.spacing(j)).astype(np.int64)

    def centers(self, coords: np.ndarray, j: int) -> np.ndarray:
        return coords * self.spacing(j)

    def balls_meeting(self, points: np.ndarray, j: int, chunk: int = 8192) -> np.ndarray:
        """Integer coordinates of every ball of level j that meets ``points``."""
        h, r = self.spacing(j), self.radius(j)
        w = int(np.ceil(np.sqrt(self.dim))) + 1
        offs = np.array(list(product(range(-w, w + 1), repeat=self.dim)), dtype=np.int64)
        found = []
        for s in range(0, len(points), chunk):
            p = points[s:s + chunk]
            base = np.floor(p / h).astype(np.int64)
            cand = base[:, None, :] + offs[None, :, :]
            ok = np.linalg.norm(cand * h - p[:, None, :], axis=-1) <= r
            found.append(np.unique(cand[ok], axis=0))
        return np.unique(np.vstack(found), axis=0)

    def neighbor_offsets(self, j: int) -> np.ndarray:
        """Lattice offsets between overlapping balls (centre distance < 2r)."""
        w = int(np.ceil(2 * np.sqrt(self.dim)))
        offs = np.array(list(product(range(-w, w + 1), repeat=self.dim)), dtype=np.int64)
        return offs[np.sum(offs**2, axis=1) < 4 * self.dim]


def lattice_for(points: np.ndarray) -> LatticeCover:
    r = float(np.max(np.linalg.norm(points, axis=1))) if len(points) else 1.0
    return LatticeCover(points.shape[1], r if r > 0 else 1.0)


@njit(cache=True)
def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@njit(cache=True)
def _union_components(keys, off_keys):
    """Union-find over sorted ball keys; balls joined when their key
    difference is one of ``off_keys``. Returns root index per ball."""
    n = keys.shape[0]
    parent = np.arange(n)
    for i in range(n):
        for o in range(off_keys.shape[0]):
            if off_keys[o] <= 0:
                continue
            nk = keys[i] + off_keys[o]
            pos = np.searchsorted(keys, nk)
            if pos < n and keys[pos] == nk:
                a = _find(parent, i)
                b = _find(parent, pos)
                if a != b:
                    if a < b:
                        parent[b] = a
                    else:
                        parent[a] = b
    for i in range(n):
        parent[i] = _find(parent, i)
    return parent


def _offset_keys(cover: LatticeCover, j: int) -> np.ndarray:
    m = cover.base(j)
    w = m ** np.arange(cover.dim, dtype=np.int64)
    return np.unique(cover.neighbor_offsets(j) @ w)


# --- component forest ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ComponentLevel:
    j: int
    n_balls: int
    point_labels: np.ndarray     # component of each cloud point
    diameters: np.ndarray        # diameter of the cloud points in each component
    parent: np.ndarray | None    # component index at level j-1

    @property
    def n_components(self) -> int:
        return len(self.diameters)


@dataclass(frozen=True, eq=False)
class ComponentForest:
    cover: LatticeCover
    levels: tuple

    @property
    def deepest(self) -> ComponentLevel:
        return self.levels[-1]

    def count(self, delta: float, level: int | None = None) -> int:
        lv = self.deepest if level is None else self.level(level)
        return int(np.sum(lv.diameters >= delta))

    def level(self, j: int) -> ComponentLevel:
        for lv in self.levels:
            if lv.j == j:
                return lv
        raise ConfigurationError(f"level {j} not in forest")

    def survivors(self, delta: float) -> list[int]:
        """Per level, the number of delta-components with a delta-descendant
        at the deepest level."""
        deep = self.deepest
        alive = np.flatnonzero(deep.diameters >= delta)
        out = [len(alive)]
        for lv_child, lv in zip(self.levels[::-1][:-1], self.levels[::-1][1:]):
            alive = np.unique(lv_child.parent[alive]) if len(alive) else alive
            alive = alive[lv.diameters[alive] >= delta]
            out.append(len(alive))
        return out[::-1]


def component_level(points: np.ndarray, cover: LatticeCover, j: int, prev: ComponentLevel | None = None) -> ComponentLevel:
    balls = cover.balls_meeting(points, j)
    keys = np.sort(cover.keys(balls, j))
    roots = _union_components(keys, _offset_keys(cover, j))
    pk = cover.keys(cover.nearest(points, j), j)
    pos = np.searchsorted(keys, pk)
    _, comp = np.unique(roots[pos], return_inverse=True)
    order = np.argsort(comp, kind="stable")
    splits = np.flatnonzero(np.diff(comp[order])) + 1
    diam = np.array([point_diameter(points[g]) for g in np.split(order, splits)])
    parent = None
    if prev is not None:
        first = order[np.concatenate([[0], splits])]
        parent = prev.point_labels[first]
    return ComponentLevel(j, len(keys), comp, diam, parent)


def deepest_level(cloud: PointCloud, cover: LatticeCover, j_max: int) -> int:
    """Largest j <= j_max whose ball radius is at least 4 x resolution."""
    if cloud.resolution <= 0:
        return j_max
    j = int(np.floor(np.log2(cover.scale / (4 * cloud.resolution))))
    return max(1, min(j_max, j))


def component_forest(S, j_max: int = 10) -> ComponentForest:
    cloud = S if isinstance(S, PointCloud) else PointCloud(S)
    if len(cloud) == 0:
        raise DomainError("empty cloud")
    cover = lattice_for(cloud.points)
    jd = deepest_level(cloud, cover, j_max)
    levels, prev = [], None
    for j in range(1, jd + 1):
        prev = component_level(cloud.points, cover, j, prev)
        levels.append(prev)
    return ComponentForest(cover, tuple(levels))


def component_count_N_delta(S, delta: float, j_max: int = 10) -> int:
    """Number of components of diameter >= delta, read at the deepest level
    that the cloud's resolution supports."""
    cloud = S if isinstance(S, PointCloud) else PointCloud(S)
    if delta <= 4 * cloud.resolution:
        raise UnreliableInputError(f"delta={delta} not above 4 x resolution={cloud.resolution}")
    return component_forest(cloud, j_max).count(delta)


# --- cut queries -------------------------------------------------------------------

@njit(cache=True)
def _csr_neighbors(keys, off_keys):
    n = keys.shape[0]
    cnt = np.zeros(n + 1, np.int64)
    buf = np.empty(n * off_keys.shape[0], np.int64)
    m = 0
    for i in range(n):
        for o in range(off_keys.shape[0]):
            if off_keys[o] == 0:
                continue
            nk = keys[i] + off_keys[o]
            pos = np.searchsorted(keys, nk)
            if pos < n and keys[pos] == nk:
                buf[m] = pos
                m += 1
        cnt[i + 1] = m
    return cnt, buf[:m].copy()


@njit(cache=True)
def _sweep_diameter(nodes, n_nodes, centers):
    """Iterated farthest-point sweeps; returns a lower bound on the diameter
    of ``centers[nodes[:n_nodes]]`` that is exact for segments."""
    d = centers.shape[1]
    a = nodes[0]
    best = 0.0
    for _ in range(3):
        far = a
        fd = -1.0
        for k in range(n_nodes):
            q = nodes[k]
            s = 0.0
            for c in range(d):
                t = centers[q, c] - centers[a, c]
                s += t * t
            if s > fd:
                fd = s
                far = q
        fd = np.sqrt(fd)
        if fd <= best:
            break
        best = fd
        a = far
    return best


@njit(cache=True)
def _cut_scan(indptr, nbrs, centers, node_count, q_ptr, q_nodes, q_removed):
    """For each query remove its points, split the remaining nodes into
    components and record the two largest component diameters."""
    n = centers.shape[0]
    nq = q_ptr.shape[0] - 1
    first = np.zeros(nq)
    second = np.zeros(nq)
    cnt = node_count.copy()
    seen = np.zeros(n, np.int64) - 1
    stack = np.empty(n, np.int64)
    comp = np.empty(n, np.int64)
    for q in range(nq):
        for k in range(q_ptr[q], q_ptr[q + 1]):
            cnt[q_nodes[k]] -= q_removed[k]
        d1 = 0.0
        d2 = 0.0
        for s in range(n):
            if cnt[s] <= 0 or seen[s] == q:
                continue
            top = 0
            stack[0] = s
            seen[s] = q
            m = 0
            while top >= 0:
                u = stack[top]
                top -= 1
                comp[m] = u
                m += 1
                for e in range(indptr[u], indptr[u + 1]):
                    v = nbrs[e]
                    if cnt[v] > 0 and seen[v] != q:
                        seen[v] = q
                        top += 1
                        stack[top] = v
            dm = _sweep_diameter(comp, m, centers)
            if dm > d1:
                d2 = d1
                d1 = dm
            elif dm > d2:
                d2 = dm
        first[q] = d1
        second[q] = d2
        for k in range(q_ptr[q], q_ptr[q + 1]):
            cnt[q_nodes[k]] += q_removed[k]
    return first, second


@dataclass(frozen=True, eq=False)
class CutEngine:
    """Removal queries for the balls of one level.

    Connectivity of S minus a query ball is evaluated at a finer level on the
    balls centred at the lattice points nearest to the remaining points
    (each such ball contains its point); balls are linked when they overlap.
    Component diameters are measured between ball centres.
    """

    cloud: PointCloud
    cover: LatticeCover
    j: int
    j_fine: int
    query_centers: np.ndarray
    node_centers: np.ndarray
    point_node: np.ndarray
    indptr: np.ndarray
    nbrs: np.ndarray
    second_diameter: np.ndarray
    first_diameter: np.ndarray
    q_ptr: np.ndarray
    q_nodes: np.ndarray
    q_removed: np.ndarray

    @property
    def radius(self) -> float:
        return self.cover.radius(self.j)

    def cut_mask(self, delta: float) -> np.ndarray:
        """Queries whose removal leaves at least two delta-components."""
        return self.second_diameter >= delta

    def removed_points(self, mask: np.ndarray) -> np.ndarray:
        """Boolean per cloud point: inside some selected query ball."""
        out = np.zeros(len(self.cloud), bool)
        if np.any(mask):
            lists = cKDTree(self.query_centers[mask]).query_ball_point(self.cloud.points, self.radius,
                                                                       return_length=True)
            out = np.asarray(lists) > 0
        return out


def build_cut_engine(S, j: int, fine_gap: int = 2, cover: LatticeCover | None = None) -> CutEngine:
    cloud = S if isinstance(S, PointCloud) else PointCloud(S)
    pts = cloud.points
    cover = cover or lattice_for(pts)
    jf = j + fine_gap
    # fine nodes: nearest lattice points
    fcoords = cover.nearest(pts, jf)
    fkeys = cover.keys(fcoords, jf)
    ukeys, point_node, node_count = np.unique(fkeys, return_inverse=True, return_counts=True)
    point_node = point_node.ravel()
    first = np.zeros(len(ukeys), np.int64)
    first[point_node[::-1]] = np.arange(len(pts))[::-1]
    node_centers = cover.centers(fcoords[first], jf)
    indptr, nbrs = _csr_neighbors(ukeys, _offset_keys(cover, jf))
    # queries: balls of level j at lattice points nearest to cloud points
    qcoords = np.unique(cover.nearest(pts, j), axis=0)
    qcent = cover.centers(qcoords, j)
    members = cKDTree(pts).query_ball_point(qcent, cover.radius(j) * (1 + 1e-12))
    q_ptr = [0]
    q_nodes, q_removed = [], []
    for mem in members:
        nodes, c = np.unique(point_node[np.asarray(mem, dtype=np.int64)], return_counts=True)
        q_nodes.append(nodes)
        q_removed.append(c)
        q_ptr.append(q_ptr[-1] + len(nodes))
    q_nodes = np.concatenate(q_nodes).astype(np.int64) if q_nodes else np.zeros(0, np.int64)
    q_removed = np.concatenate(q_removed).astype(np.int64) if q_removed else np.zeros(0, np.int64)
    q_ptr = np.asarray(q_ptr, np.int64)
    d1, d2 = _cut_scan(indptr, nbrs, node_centers, node_count.astype(np.int64), q_ptr, q_nodes, q_removed)
    return CutEngine(cloud, cover, j, jf, qcent, node_centers, point_node, indptr, nbrs, d2, d1,
                     q_ptr, q_nodes, q_removed)


def delta_cutpoints(S, delta: float, j: int, fine_gap: int = 2, engine: CutEngine | None = None) -> PointCloud:
    """Centres of the level-j balls D' meeting S with N_delta(S minus D') >= 2."""
    cloud = S if isinstance(S, PointCloud) else PointCloud(S)
    if delta <= 4 * cloud.resolution:
        raise UnreliableInputError(f"delta={delta} not above 4 x resolution={cloud.resolution}")
    engine = engine or build_cut_engine(cloud, j, fine_gap)
    return PointCloud(engine.query_centers[engine.cut_mask(delta)])


def cut_set_A_delta(S, delta: float, j_window, fine_gap: int = 2) -> PointCloud:
    """Tail intersection of A_{delta, j} over the levels in ``j_window``.

    Returns the finest level's cut centres lying within 2 x 2^-j_min R of the
    cut centres of every level in the window.
    """
    cloud = S if isinstance(S, PointCloud) else PointCloud(S)
    window = sorted(j_window)
    cover = lattice_for(cloud.points)
    sets = [delta_cutpoints(cloud, delta, j, fine_gap,
                            build_cut_engine(cloud, j, fine_gap, cover)).points for j in window]
    if any(len(s) == 0 for s in sets):
        return PointCloud(np.empty((0, cloud.dim)))
    tol = 2 * cover.radius(window[0])
    keep = np.ones(len(sets[-1]), bool)
    for s in sets[:-1]:
        keep &= cKDTree(s).query(sets[-1])[0] <= tol
    return PointCloud(sets[-1][keep])


# --- cut-time oracle -------------------------------------------------------------

@njit(cache=True)
def _strand_limits(points, tol):
    n = points.shape[0]
    d = points.shape[1]
    a = np.empty(n, np.int64)
    b = np.empty(n, np.int64)
    t2 = tol * tol
    for k in range(n):
        i = k - 1
        while i >= 0:
            s = 0.0
            for c in range(d):
                x = points[i, c] - points[k, c]
                s += x * x
            if s > t2:
                break
            i -= 1
        a[k] = i
        i = k + 1
        while i < n:
            s = 0.0
            for c in range(d):
                x = points[i, c] - points[k, c]
                s += x * x
            if s > t2:
                break
            i += 1
        b[k] = i
    return a, b


def cut_times_oracle(path_points: np.ndarray, gap_tol: float, times: np.ndarray | None = None):
    """Indices (or times) k whose past and future strands stay more than
    ``gap_tol`` apart.

    The strand through k, i.e. the maximal run of neighbouring samples within
    gap_tol of points[k], is excluded from both sides; a cut-time needs
    nonempty past and future beyond it.
    """
    pts = np.asarray(path_points, dtype=float)
    n = len(pts)
    a, b = _strand_limits(pts, float(gap_tol))
    pairs = cKDTree(pts).query_pairs(gap_tol, output_type="ndarray")
    # close pair (i, j), i < j, blocks k when i <= a_k and j >= b_k
    min_i = np.full(n + 1, n, np.int64)
    if len(pairs):
        i, jj = pairs.min(axis=1), pairs.max(axis=1)
        np.minimum.at(min_i, jj, i)
    suffix_min = np.minimum.accumulate(min_i[::-1])[::-1]
    ok = (a >= 0) & (b < n)
    blocked = suffix_min[np.minimum(b, n)] <= a
    idx = np.flatnonzero(ok & ~blocked)
    return idx if times is None else np.asarray(times)[idx]


def oracle_cutpoints(path_points: np.ndarray, delta: float, gap_tol: float) -> np.ndarray:
    """Oracle delta-cutpoints: cut-time points whose past and future both
    have diameter >= delta."""
    pts = np.asarray(path_points, dtype=float)
    idx = cut_times_oracle(pts, gap_tol)
    if len(idx) == 0:
        return np.empty((0, pts.shape[1]))
    past = _running_extent(pts)
    fut = _running_extent(pts[::-1])[::-1]
    keep = (past[idx] >= delta) & (fut[idx] >= delta)
    return pts[idx[keep]]


def _running_extent(pts):
    """Lower bound on diam(points[0..k]): max distance from points[0] or from
    the running farthest point, exact for monotone segments."""
    d0 = np.linalg.norm(pts - pts[0], axis=1)
    return np.maximum.accumulate(d0)


# --- endpoint candidates ------------------------------------------------------------

@njit(cache=True)
def _label_alive(indptr, nbrs, alive):
    n = alive.shape[0]
    lab = np.full(n, -1, np.int64)
    stack = np.empty(n, np.int64)
    c = 0
    for s in range(n):
        if not alive[s] or lab[s] >= 0:
            continue
        top = 0
        stack[0] = s
        lab[s] = c
        while top >= 0:
            u = stack[top]
            top -= 1
            for e in range(indptr[u], indptr[u + 1]):
                v = nbrs[e]
                if alive[v] and lab[v] < 0:
                    lab[v] = c
                    top += 1
                    stack[top] = v
        c += 1
    return lab


@njit(cache=True)
def _bfs_hops(indptr, nbrs, allowed, sources):
    n = allowed.shape[0]
    dist = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    head = 0
    tail = 0
    for s in sources:
        if dist[s] < 0:
            dist[s] = 0
            queue[tail] = s
            tail += 1
    while head < tail:
        u = queue[head]
        head += 1
        for e in range(indptr[u], indptr[u + 1]):
            v = nbrs[e]
            if allowed[v] and dist[v] < 0:
                dist[v] = dist[u] + 1
                queue[tail] = v
                tail += 1
    return dist


@njit(cache=True)
def _far_sides(indptr, nbrs, centers, node_count, q_ptr, q_nodes, q_removed,
               queries, origin_node, delta):
    """For each query ball: remove its points; if at least two remaining
    pieces have diameter >= delta, return the nodes of those big pieces that
    avoid the origin (CSR over queries)."""
    n = centers.shape[0]
    nq = queries.shape[0]
    cnt = node_count.copy()
    seen = np.full(n, -1, np.int64)
    stack = np.empty(n, np.int64)
    comp = np.empty(n, np.int64)
    starts = np.empty(n + 1, np.int64)
    diams = np.empty(n)
    has0 = np.empty(n, np.bool_)
    out_ptr = np.zeros(nq + 1, np.int64)
    out = np.empty(0, np.int64)
    buf = np.empty(n, np.int64)
    for qi in range(nq):
        q = queries[qi]
        for k in range(q_ptr[q], q_ptr[q + 1]):
            cnt[q_nodes[k]] -= q_removed[k]
        m_all = 0
        nc = 0
        for s in range(n):
            if cnt[s] <= 0 or seen[s] == qi:
                continue
            top = 0
            stack[0] = s
            seen[s] = qi
            starts[nc] = m_all
            while top >= 0:
                u = stack[top]
                top -= 1
                comp[m_all] = u
                m_all += 1
                for e in range(indptr[u], indptr[u + 1]):
                    v = nbrs[e]
                    if cnt[v] > 0 and seen[v] != qi:
                        seen[v] = qi
                        top += 1
                        stack[top] = v
            diams[nc] = _sweep_diameter(comp[starts[nc]:m_all], m_all - starts[nc], centers)
            h = False
            for k in range(starts[nc], m_all):
                if origin_node[comp[k]]:
                    h = True
            has0[nc] = h
            nc += 1
        starts[nc] = m_all
        big = 0
        for c in range(nc):
            if diams[c] >= delta:
                big += 1
        m = 0
        if big >= 2:
            for c in range(nc):
                if has0[c] or diams[c] < delta:
                    continue
                for k in range(starts[c], starts[c + 1]):
                    buf[m] = comp[k]
                    m += 1
        if m > 0:
            grown = np.empty(out.shape[0] + m, np.int64)
            grown[:out.shape[0]] = out
            grown[out.shape[0]:] = buf[:m]
            out = grown
        out_ptr[qi + 1] = out_ptr[qi] + m
        for k in range(q_ptr[q], q_ptr[q + 1]):
            cnt[q_nodes[k]] += q_removed[k]
    return out_ptr, out


@dataclass(frozen=True, eq=False)
class PhiResult:
    candidates: np.ndarray          # (k, d) candidate points of S
    chain_length: np.ndarray        # length of the nested far-side chain ending at each candidate
    far_size: np.ndarray            # nodes in the terminal far side of each candidate
    cut_centers: np.ndarray         # cut ball centres used (finest delta of the schedule)
    engine: CutEngine
    inconclusive: bool = False

    def as_cloud(self) -> PointCloud:
        return PointCloud(self.candidates)


def _nested_chains(ptr, nodes, touched_ptr, touched, n_nodes, slack):
    """Longest chains of strictly nested far sides. F_b is nested in F_a when
    all but a ``slack`` fraction of F_b lies in F_a or in the ball of a."""
    from scipy.sparse import csr_matrix
    nq = len(ptr) - 1
    size = np.diff(ptr)
    F = csr_matrix((np.ones(len(nodes)), nodes, ptr), shape=(nq, n_nodes))
    T = csr_matrix((np.ones(len(touched)), touched, touched_ptr), shape=(nq, n_nodes))
    U = ((F + T) > 0).astype(float)
    inter = (F @ U.T).toarray()
    inside = inter >= size[:, None] * (1 - slack) - 1e-9    # inside[b, a]: F_b within U_a
    order = np.argsort(-size, kind="stable")
    length = np.ones(nq, np.int64)
    prev = np.full(nq, -1, np.int64)
    for ib, b in enumerate(order):
        for a in order[:ib]:
            if size[a] > size[b] and inside[b, a] and length[a] + 1 > length[b]:
                length[b] = length[a] + 1
                prev[b] = a
    return length, prev


def endpoint_candidates_phi(S, delta_schedule, j: int, fine_gap: int = 2,
                            origin=None, origin_radius: float | None = None,
                            engine: CutEngine | None = None, slack: float = 0.02) -> PhiResult:
    """Non-origin end of the cut structure: limits of delta-cutpoints that are
    not cutpoints themselves.

    Every cut ball (at the finest delta of the schedule) avoiding the origin
    region has a far side: the big pieces of S minus the ball that avoid the
    origin. Along the cutpoints the far sides are nested; balls that only
    clip off a side loop produce far sides outside that nesting. The
    terminal far side of the longest nested chain holds the end; its node
    deepest (in hops) from the cut ball is the candidate.
    """
    cloud = S if isinstance(S, PointCloud) else PointCloud(S)
    sched = np.array(sorted(delta_schedule, reverse=True), dtype=float)
    if sched.min() <= 4 * cloud.resolution:
        raise UnreliableInputError("delta schedule reaches below 4 x resolution")
    delta = float(sched.min())
    eng = engine or build_cut_engine(cloud, j, fine_gap)
    origin = np.zeros(cloud.dim) if origin is None else np.asarray(origin, float)
    origin_radius = 4 * cloud.resolution if origin_radius is None else origin_radius
    n_nodes = len(eng.node_centers)
    dist0 = np.linalg.norm(cloud.points - origin, axis=1)
    near0 = dist0 <= origin_radius
    if not near0.any():
        near0[np.argmin(dist0)] = True
    origin_node = np.zeros(n_nodes, bool)
    origin_node[eng.point_node[near0]] = True
    mask = eng.cut_mask(delta)
    mask &= np.linalg.norm(eng.query_centers - origin, axis=1) > eng.radius + origin_radius
    queries = np.flatnonzero(mask).astype(np.int64)
    empty = PhiResult(np.empty((0, cloud.dim)), np.empty(0, np.int64), np.empty(0, np.int64),
                      eng.query_centers[mask], eng, True)
    if len(queries) == 0:
        return empty
    node_count = np.bincount(eng.point_node, minlength=n_nodes).astype(np.int64)
    ptr, nodes = _far_sides(eng.indptr, eng.nbrs, eng.node_centers, node_count,
                            eng.q_ptr, eng.q_nodes, eng.q_removed, queries, origin_node, delta)
    keep = np.diff(ptr) > 0
    if not keep.any():
        return empty
    sel = np.flatnonzero(keep)
    parts = [nodes[ptr[i]:ptr[i + 1]] for i in sel]
    f_ptr = np.concatenate([[0], np.cumsum([len(p) for p in parts])])
    t_parts = [eng.q_nodes[eng.q_ptr[queries[i]]:eng.q_ptr[queries[i] + 1]] for i in sel]
    t_ptr = np.concatenate([[0], np.cumsum([len(p) for p in t_parts])])
    length, _ = _nested_chains(f_ptr, np.concatenate(parts), t_ptr, np.concatenate(t_parts), n_nodes, slack)
    best = np.flatnonzero(length == length.max())
    cands, lens, sizes = [], [], []
    for b in best:
        inside = np.zeros(n_nodes, bool)
        inside[parts[b]] = True
        ball = np.zeros(n_nodes, bool)
        ball[t_parts[b]] = True
        src = np.repeat(np.arange(n_nodes), np.diff(eng.indptr))
        edge = inside[src] & ball[eng.nbrs]
        srcs = np.unique(src[edge])
        if len(srcs) == 0:
            srcs = parts[b][:1]
        dist = _bfs_hops(eng.indptr, eng.nbrs, inside, srcs.astype(np.int64))
        far = int(np.argmax(np.where(inside, dist, -1)))
        cands.append(cloud.points[np.flatnonzero(eng.point_node == far)[0]])
        lens.append(length[b])
        sizes.append(len(parts[b]))
    cands = np.array(cands)
    _, uniq = np.unique(cands, axis=0, return_index=True)
    uniq = np.sort(uniq)
    return PhiResult(cands[uniq], np.array(lens)[uniq], np.array(sizes)[uniq],
                     eng.query_centers[mask], eng, False)


def choose_endpoint(phi: PhiResult):
    """Candidate with the smallest terminal far side, ties broken
    lexicographically. Returns (point or None, number tied)."""
    if len(phi.candidates) == 0:
        return None, 0
    tied = np.flatnonzero(phi.far_size == phi.far_size.min())
    pts = phi.candidates[tied]
    order = np.lexsort(pts.T[::-1])
    return pts[order[0]], len(tied)
