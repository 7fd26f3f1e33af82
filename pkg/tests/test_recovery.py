import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial import cKDTree
from scipy.stats import spearmanr

from occlab.cover import build_cover
from occlab.errors import ConfigurationError, DomainError, UnreliableInputError
from occlab.occupation import Cap, OccupationMeasure, occupation_measure
from occlab.paths import TimeGrid, simulate_bm
from occlab.recovery import (dyadic_radii, geodesic_hops, normalizer, oracle_endpoint, r_min_for,
                             reconstruct_range_psi, recover_endpoint, rho_estimate, rho_level,
                             thick_points_statistic, thick_profile)
from occlab.rng import RngStreamSpec
from occlab.topology import point_diameter


@pytest.fixture(scope="module")
def bm3():
    path = simulate_bm(3, TimeGrid(1.0, 2**14), RngStreamSpec(505, 0))
    return path, occupation_measure(path)


def test_dyadic_radii():
    assert dyadic_radii(0.5, 0.1).tolist() == [0.5, 0.25, 0.125]
    assert dyadic_radii(0.3, 0.0625).tolist() == [0.25, 0.125, 0.0625]


def test_normalizer_values():
    r = 0.25
    assert normalizer(r, 3) == pytest.approx(2 * r**2 * np.log(r) ** 2)
    assert normalizer(r, 4, 3.0) == pytest.approx(3 * r**2 * np.log(4))


def test_r_min_and_schedule_errors(bm3):
    _, mu = bm3
    assert r_min_for(mu) == pytest.approx(4 * 2.0**-7)
    cap = Cap((0.0, 0.0, 1.0), 0.5)
    with pytest.raises(UnreliableInputError):
        rho_estimate(mu, cap, radii=[0.25, 0.01])
    with pytest.raises(ConfigurationError):
        rho_estimate(mu, cap, radii=[0.125, 0.25])
    with pytest.raises(ConfigurationError):
        rho_estimate(mu, Cap((0.0, 0.0, 1.0), 0.1), radii=[0.125])
    planar = OccupationMeasure(np.array([[1.0, 0.0]]), np.array([1.0]), {"n_steps": 16})
    with pytest.raises(DomainError):
        rho_estimate(planar, Cap((1.0, 0.0), 0.5))


def test_rho_monotone_in_cap(bm3):
    _, mu = bm3
    cover = build_cover(3, 5)
    small = rho_estimate(mu, Cap((0.0, 0.0, 1.0), 0.5), cover=cover)
    big = rho_estimate(mu, Cap((0.0, 0.0, 1.0), 1.0), cover=cover)
    assert small.value <= big.value
    assert [r for r, _ in small.profile] == sorted((r for r, _ in small.profile), reverse=True)


def test_rho_tracks_true_radius():
    # rank correlation with the true sup |W_t| over the cap exceeds 0.5
    path = simulate_bm(3, TimeGrid(1.0, 2**16), RngStreamSpec(506, 0))
    mu = occupation_measure(path)
    cover = build_cover(3, 6)
    rng = np.random.default_rng(0)
    dirs = mu.directions
    radii = np.linalg.norm(path.points[: len(dirs)], axis=1)
    est, true = [], []
    while len(est) < 50:
        c = rng.normal(size=3)
        c /= np.linalg.norm(c)
        cap = Cap(tuple(c), 0.5)
        inside = cap.contains(dirs)
        if not inside.any():
            continue
        est.append(rho_estimate(mu, cap, cover=cover).value)
        true.append(radii[inside].max())
    rho = spearmanr(est, true)[0]
    print(f"rank correlation {rho:.3f}")
    assert rho > 0.5


def test_rho_level_matches_single_caps(bm3):
    _, mu = bm3
    cover = build_cover(3, 5)
    lv = rho_level(mu, cover, 2)
    for i in [0, 3, len(lv) - 1]:
        c = cover.centers(2)[i]
        one = rho_estimate(mu, Cap(tuple(c / np.linalg.norm(c)), cover.radius(2)), cover=cover)
        assert lv[i] == pytest.approx(one.value)


def test_psi_points_structure_and_determinism(bm3):
    _, mu = bm3
    cover = build_cover(3, 5)
    psi = reconstruct_range_psi(mu, cover, [3, 4, 5])
    again = reconstruct_range_psi(mu, cover, [3, 4, 5])
    assert np.array_equal(psi.points, again.points)
    assert len(psi) > 0
    norms = np.linalg.norm(psi.points, axis=1)
    keep = norms > 0
    values = np.concatenate([rho_level(mu, cover, j) for j in [3, 4, 5]])
    assert np.all(np.isin(np.round(norms[keep], 12), np.round(values, 12)))
    units = psi.points[keep] / norms[keep, None]
    centers = np.vstack([cover.centers(j) for j in [3, 4, 5]])
    assert cKDTree(centers).query(units)[0].max() < 1e-9


def test_recover_endpoint_report(bm3):
    path, mu = bm3
    cover = build_cover(3, 5)
    rep = recover_endpoint(mu, cover, [3, 4, 5], truth_range=path.points, truth_endpoint=path.points[-1])
    assert rep.hausdorff_to_truth is not None and rep.hausdorff_to_truth > 0
    if rep.endpoint_estimate is not None:
        assert rep.endpoint_error == pytest.approx(np.linalg.norm(rep.endpoint_estimate - path.points[-1]))


def test_geodesic_hops_on_a_line():
    pts = np.c_[np.arange(10.0), np.zeros(10), np.zeros(10)]
    src = np.zeros(10, bool)
    src[0] = True
    assert geodesic_hops(pts, 1.01, src).tolist() == list(range(10))


def test_oracle_endpoint_line_and_bm():
    line = np.linspace([0, 0, 0], [1, 0, 0], 201)
    est, _ = oracle_endpoint(line)
    assert np.linalg.norm(est - line[-1]) <= 0.02
    close = 0
    for i in range(10):
        pts = simulate_bm(3, TimeGrid(1.0, 2**14), RngStreamSpec(507, i)).points
        est, _ = oracle_endpoint(pts)
        if est is not None and np.linalg.norm(est - pts[-1]) < 0.15 * point_diameter(pts):
            close += 1
    assert close >= 7


# --- planar thick points ------------------------------------------------------

def test_thick_uniform_small():
    # uniform law on the unit disk: ratio close to 1 / (pi log^2 r) * pi = 1 / log^2 r
    g = (np.arange(400) + 0.5) / 200 - 1
    pts = np.array(np.meshgrid(g, g)).reshape(2, -1).T
    pts = pts[np.linalg.norm(pts, axis=1) <= 1]
    stat = thick_points_statistic(pts, 1 / len(pts), 2.0 ** -np.arange(3, 7))
    assert stat < 0.5


@given(st.integers(0, 10**6))
def test_thick_sup_grows_with_radii(seed):
    pts = np.random.default_rng(seed).random((300, 2))
    radii = 2.0 ** -np.arange(2, 5)
    a = thick_points_statistic(pts, 1 / 300, radii)
    b = thick_points_statistic(pts, 1 / 300, np.r_[radii, 2.0**-5])
    assert b >= a
    assert max(v for _, v in thick_profile(pts, 1 / 300, radii)) == pytest.approx(a)


def test_thick_planar_bm_bracket():
    n = 2**16
    pts = simulate_bm(2, TimeGrid(1.0, n), RngStreamSpec(508, 0)).points[1:]
    stat = thick_points_statistic(pts, 1 / n, 2.0 ** -np.arange(3, 7))
    assert 0.5 <= stat <= 8


def test_thick_rejects_non_planar():
    with pytest.raises(DomainError):
        thick_points_statistic(np.zeros((3, 3)), 1.0, [0.1])
