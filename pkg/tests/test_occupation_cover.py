import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats
from scipy.spatial import cKDTree
from scipy.stats import special_ortho_group

from occlab.cover import build_cover, sphere_candidates
from occlab.errors import ConfigurationError, DomainError, ResourceError
from occlab.occupation import (Cap, OccupationMeasure, cap_mass, cap_masses, conditional_given_cap_mass,
                               occupation_measure, quadrant_index, quadrant_occupations,
                               quadrant_occupations_batch)
from occlab.paths import SamplePath, TimeGrid, brownian_batch, simulate_bm
from occlab.rng import RngStreamSpec


def bm_measure(dim=3, n=1024, seed=0):
    return occupation_measure(simulate_bm(dim, TimeGrid(1.0, n), RngStreamSpec(seed)))


def test_total_mass_and_single_atom():
    assert abs(bm_measure().total - 1) < 1e-9
    mu = occupation_measure(simulate_bm(3, TimeGrid(1.0, 1), RngStreamSpec(0)))
    assert len(mu.weights) == 1 and mu.weights[0] == 1.0


def test_midpoint_rule_variant():
    p = simulate_bm(2, TimeGrid(1.0, 64), RngStreamSpec(1))
    mu = occupation_measure(p, rule="midpoint")
    assert abs(mu.total - 1) < 1e-12 and mu.metadata["rule"] == "midpoint"
    with pytest.raises(ConfigurationError):
        occupation_measure(p, rule="simpson")


def test_one_dimensional_measure_is_positive_time():
    g = TimeGrid(1.0, 2**10)
    p = simulate_bm(1, g, RngStreamSpec(2))
    mu = occupation_measure(p)
    plus = mu.weights[mu.directions[:, 0] > 0].sum()
    assert np.isclose(plus, np.mean(p.points[:-1, 0] >= 0))


def test_positive_time_arcsine():
    b = brownian_batch(1, TimeGrid(1.0, 2**10), 3, range(20000))[:, :, 0]
    v = np.mean(b[:, :-1] >= 0, axis=1)
    assert stats.kstest(v, stats.beta(0.5, 0.5).cdf).statistic < 0.03


def test_cap_mass_examples():
    mu = bm_measure()
    assert cap_mass(mu, Cap((1.0, 0.0, 0.0), 2.0)) == pytest.approx(1.0)
    empty = OccupationMeasure(np.array([[1.0, 0, 0]]), np.array([1.0]))
    assert cap_mass(empty, Cap((-1.0, 0.0, 0.0), 0.5)) == 0.0
    with pytest.raises(DomainError):
        Cap((1.0, 1.0, 0.0), 0.5)
    with pytest.raises(DomainError):
        Cap((1.0, 0.0, 0.0), 3.0)


def test_partition_additivity():
    mu = bm_measure()
    signs = np.sign(mu.directions[:, 2])
    upper = mu.weights[signs > 0].sum() + mu.weights[signs <= 0].sum()
    assert abs(upper - 1) < 1e-9


@given(st.integers(0, 1000), st.floats(0.05, 1.0), st.floats(0.0, 0.9))
def test_cap_mass_monotone_in_radius(seed, r, extra):
    mu = bm_measure(n=256, seed=seed)
    c = np.array([[0.0, 0.0, 1.0]])
    assert cap_masses(mu, c, r)[0] <= cap_masses(mu, c, r + extra)[0]


def test_cap_masses_matches_cap_mass():
    mu = bm_measure(n=512, seed=5)
    centers = build_cover(3, 3).centers(3)
    batch = cap_masses(mu, centers, 0.25)
    single = [cap_mass(mu, Cap(tuple(c), 0.25)) for c in centers]
    assert np.allclose(batch, single)
    weighted = OccupationMeasure(mu.directions, mu.weights * np.linspace(0.5, 1.5, len(mu.weights)))
    w_batch = cap_masses(weighted, centers, 0.25)
    w_single = [cap_mass(weighted, Cap(tuple(c), 0.25)) for c in centers]
    assert np.allclose(w_batch, w_single)


def test_scaling_and_rotation_invariance():
    p = simulate_bm(3, TimeGrid(1.0, 256), RngStreamSpec(6))
    mu = occupation_measure(p)
    mu2 = occupation_measure(SamplePath(p.grid, 3, 3.7 * p.points))
    assert np.allclose(mu.directions[1:], mu2.directions[1:], atol=1e-15)
    q = special_ortho_group.rvs(3, random_state=0)
    mu3 = occupation_measure(SamplePath(p.grid, 3, p.points @ q.T))
    assert np.allclose(mu.directions[1:] @ q.T, mu3.directions[1:], atol=1e-12)


def test_quadrant_occupations():
    p = simulate_bm(2, TimeGrid(1.0, 512), RngStreamSpec(7))
    q = quadrant_occupations(p)
    assert abs(q.sum() - 1) < 1e-9
    assert np.allclose(quadrant_occupations_batch(p.points[None])[0], q)
    with pytest.raises(DomainError):
        quadrant_occupations(simulate_bm(3, TimeGrid(1.0, 8), RngStreamSpec(0)))


def test_quadrant_convention():
    x = np.array([0.0, 1.0, 0.0, -1.0, -1.0, 1.0, 0.0])
    y = np.array([0.0, 1.0, 1.0, 0.0, -1.0, 0.0, -1.0])
    assert quadrant_index(x, y).tolist() == [0, 0, 0, 3, 2, 1, 2]


def test_quadrant_means_and_half_plane():
    pts = brownian_batch(2, TimeGrid(1.0, 512), 8, range(10000))
    q = quadrant_occupations_batch(pts)
    se = q.std(axis=0) / np.sqrt(len(q))
    assert np.all(np.abs(q.mean(axis=0) - 0.25) < 3 * se + 1e-3)
    half = q[:, 0] + q[:, 1]
    assert stats.kstest(half, stats.beta(0.5, 0.5).cdf).statistic < 0.035


@pytest.mark.parametrize("dim,j_max", [(2, 6), (3, 5)])
def test_cover_covering_and_nesting(dim, j_max):
    cov = build_cover(dim, j_max)
    probes = np.random.default_rng(0).standard_normal((10000, dim))
    probes /= np.linalg.norm(probes, axis=1, keepdims=True)
    for j in range(1, j_max + 1):
        g = cov.centers(j)
        assert np.allclose(np.linalg.norm(g, axis=1), 1)
        assert cKDTree(g).query(probes)[0].max() <= 2.0 ** -j
        if j > 1:
            prev = cov.centers(j - 1)
            assert np.array_equal(g[:len(prev)], prev)
            # each cap of level j lies in a cap of level j-1 (chordal radii)
            d = cKDTree(prev).query(g)[0]
            assert np.all(d + 2.0 ** -j <= 2.0 ** -(j - 1) + 1e-12)
            # packing separation
            pairs = cKDTree(g).query_pairs(2.0 ** -(j + 1) * (1 - 1e-12))
            assert len(pairs) == 0


def test_cover_growth_ratio():
    cov = build_cover(3, 6)
    for j in range(3, 6):
        ratio = cov.size(j + 1) / cov.size(j)
        assert 2 <= ratio <= 8


def test_cover_errors():
    with pytest.raises(ConfigurationError):
        build_cover(1, 3)
    with pytest.raises(ResourceError):
        build_cover(3, 12)
    assert sphere_candidates(4, 100).shape == (100, 4)


def test_conditional_curve():
    v = np.random.default_rng(0).random(5000)
    c = conditional_given_cap_mass(v, np.ones_like(v))
    occ = c.occupied(1)
    assert np.all(c.mean_hit[occ] == 1)
    with pytest.raises(DomainError):
        conditional_given_cap_mass([], [])


def _early_cap_coverage(n, n_paths=30):
    centers = build_cover(3, 1).centers(1)
    frac, full = [], 0
    for i in range(n_paths):
        p = simulate_bm(3, TimeGrid(1.0, n), RngStreamSpec(10, i)).points[1:n // 100 + 1]
        d = p / np.linalg.norm(p, axis=1, keepdims=True)
        hit = cKDTree(d).query(centers)[0] <= 0.5
        frac.append(hit.mean())
        full += bool(hit.all())
    return float(np.mean(frac)), full


def test_early_projection_coverage_grows_with_resolution():
    # The continuum path winds densely near t = 0; a discrete path only sees
    # the windings above its step size, so the share of radius-0.5 caps hit
    # by time 0.01 grows slowly with n_steps (full coverage is rare at 2^16).
    f12, _ = _early_cap_coverage(2**12)
    f16, full16 = _early_cap_coverage(2**16)
    print(f"cap coverage by t=0.01: 2^12 -> {f12:.3f}, 2^16 -> {f16:.3f} ({full16}/30 full)")
    assert f16 > f12 + 0.1
