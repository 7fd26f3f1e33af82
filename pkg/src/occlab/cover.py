"""Nested covers of the unit sphere by caps of radius 2^-j.

Level j holds a maximal 2^-(j+1)-separated subset GRID_j of a fixed
low-discrepancy candidate set, built greedily with GRID_{j-1} seeded first.
Because every later level draws from the same candidates, each GRID_{j+1}
point lies within 2^-(j+1) of GRID_j, so every cap of C_{j+1} sits inside a
cap of C_j exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np
from numba import njit
from scipy.spatial import cKDTree
from scipy.stats import qmc, norm

from .errors import ConfigurationError, ResourceError

DEFAULT_MEMORY_BUDGET = 1.5 * 2**30


def sphere_candidates(dim: int, n: int) -> np.ndarray:
    """Deterministic low-discrepancy points on S^{dim-1}."""
    if dim == 2:
        u = qmc.Halton(d=1, scramble=False).random(n)[:, 0]
        ang = 2 * np.pi * u
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if dim == 3:
        # Fibonacci lattice: equal-area bands, golden-angle longitudes
        i = np.arange(n)
        z = 1 - (2 * i + 1) / n
        phi = np.mod(i * np.pi * (3 - np.sqrt(5)), 2 * np.pi)
        s = np.sqrt(np.clip(1 - z * z, 0, None))
        return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    u = qmc.Halton(d=dim, scramble=False).random(n + 1)[1:]
    g = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _candidate_count(dim: int, j_max: int) -> int:
    # fill distance about 2^-(j_max+3): enough that greedy covering radius
    # exceeds the separation by a small fraction only
    h = 2.0 ** -(j_max + 3)
    return int(np.ceil(4.0 * (1.0 / h) ** (dim - 1)))


@njit(cache=True)
def _greedy_pack(points, order, sep, ukeys, cand_cell, offsets, cap):
    n, d = points.shape
    n_cells = ukeys.shape[0]
    cell_pts = -np.ones((n_cells, cap), np.int64)
    cell_cnt = np.zeros(n_cells, np.int64)
    accepted = np.zeros(n, np.bool_)
    acc_order = np.empty(n, np.int64)
    n_acc = 0
    sep2 = sep * sep
    for oi in range(order.shape[0]):
        i = order[oi]
        if accepted[i]:
            continue
        key = ukeys[cand_cell[i]]
        ok = True
        for o in range(offsets.shape[0]):
            nk = key + offsets[o]
            pos = np.searchsorted(ukeys, nk)
            if pos >= n_cells or ukeys[pos] != nk:
                continue
            for s in range(cell_cnt[pos]):
                j = cell_pts[pos, s]
                dist2 = 0.0
                for a in range(d):
                    diff = points[i, a] - points[j, a]
                    dist2 += diff * diff
                if dist2 < sep2:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            c = cand_cell[i]
            if cell_cnt[c] >= cap:
                return acc_order[:0]
            accepted[i] = True
            cell_pts[c, cell_cnt[c]] = i
            cell_cnt[c] += 1
            acc_order[n_acc] = i
            n_acc += 1
    return acc_order[:n_acc]


def greedy_packing(points: np.ndarray, sep: float, seed_idx=None) -> np.ndarray:
    """Indices of a maximal ``sep``-separated subset of ``points``.

    Points listed in ``seed_idx`` are offered first (in order), then every
    point in index order. Points must lie in [-1, 1]^d. Returned indices are
    in acceptance order, so accepted seeds form a prefix.
    """
    points = np.ascontiguousarray(points, dtype=float)
    n, d = points.shape
    ncell = int(np.floor(2.0 / sep)) + 3
    coords = np.floor((points + 1.0) / sep).astype(np.int64) + 1
    base = ncell ** np.arange(d, dtype=np.int64)
    keys = coords @ base
    ukeys, cand_cell = np.unique(keys, return_inverse=True)
    offsets = np.array([np.dot(o, base) for o in product((-1, 0, 1), repeat=d)], dtype=np.int64)
    seed_idx = np.asarray([] if seed_idx is None else seed_idx, dtype=np.int64)
    order = np.concatenate([seed_idx, np.arange(n, dtype=np.int64)])
    out = _greedy_pack(points, order, float(sep), ukeys, cand_cell.ravel().astype(np.int64), offsets, 2**d + 1)
    if len(out) == 0 and n > 0:
        raise RuntimeError("cell capacity exceeded during packing")
    return out


@dataclass(frozen=True, eq=False)
class CoverHierarchy:
    """Levels j = 1..j_max of cap centres on S^{dim-1}.

    ``grids[j - 1]`` holds GRID_j as rows of unit vectors; GRID_{j-1} is a
    prefix of GRID_j. ``fill_distance`` bounds how far any sphere point is
    from the candidate set, so GRID_j is (2^-(j+1) + fill_distance)-dense.
    """

    dim: int
    j_max: int
    grids: tuple
    fill_distance: float

    def centers(self, j: int) -> np.ndarray:
        if not 1 <= j <= self.j_max:
            raise ConfigurationError(f"level {j} outside 1..{self.j_max}")
        return self.grids[j - 1]

    def radius(self, j: int) -> float:
        return 2.0 ** -j

    def size(self, j: int) -> int:
        return len(self.centers(j))

    def parent_index(self, j: int) -> np.ndarray:
        """For each cap of C_j (j >= 2), the index of a containing cap of C_{j-1}."""
        _, idx = cKDTree(self.centers(j - 1)).query(self.centers(j))
        return idx


def build_cover(dim: int, j_max: int, memory_budget: float = DEFAULT_MEMORY_BUDGET) -> CoverHierarchy:
    if dim < 2:
        raise ConfigurationError("sphere covers need dim >= 2")
    if j_max < 1:
        raise ConfigurationError("j_max must be at least 1")
    n = _candidate_count(dim, j_max)
    need = n * dim * 8 * 8
    if need > memory_budget:
        raise ResourceError(
            f"cover with dim={dim}, j_max={j_max} needs ~{need / 2**20:.0f} MiB "
            f"(> budget {memory_budget / 2**20:.0f} MiB); lower j_max")
    return _build_cover_cached(int(dim), int(j_max))


@lru_cache(maxsize=8)
def _build_cover_cached(dim: int, j_max: int) -> CoverHierarchy:
    n = _candidate_count(dim, j_max)
    cand = sphere_candidates(dim, n)
    grids = []
    prev = None
    for j in range(1, j_max + 1):
        idx = greedy_packing(cand, 2.0 ** -(j + 1), prev)
        grids.append(cand[idx])
        grids[-1].setflags(write=False)
        prev = idx
    probes = np.random.default_rng(0).standard_normal((20000, dim))
    probes /= np.linalg.norm(probes, axis=1, keepdims=True)
    fill = float(cKDTree(cand).query(probes)[0].max())
    return CoverHierarchy(dim, j_max, tuple(grids), fill)
