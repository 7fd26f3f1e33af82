import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, stats

from occlab.errors import ConfigurationError, DomainError
from occlab.paths import (DiscreteAngleLaw, SamplePath, TimeGrid, UniformAngleLaw, brownian_batch,
                          excursion_count_process, perturbed_from_bm, positivity_parameter, simulate_bm,
                          simulate_dirichlet_angle_process, simulate_perturbed_bm, simulate_stable_levy,
                          simulate_walsh_angles, spherical_project, stable_variates, walsh_from_bm)
from occlab.rng import RngStreamSpec, batch_ranges, parallel_map


def terminal_values(dim, horizon, n_rep, seed, n_steps=64):
    g = TimeGrid(horizon, n_steps)
    return brownian_batch(dim, g, seed, range(n_rep))[:, -1, :]


def test_stream_reproducible_and_distinct():
    a = RngStreamSpec(7, 3).generator().random(5)
    b = RngStreamSpec(7, 3).generator().random(5)
    c = RngStreamSpec(7, 4).generator().random(5)
    d = RngStreamSpec(7, 3).child(1).generator().random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_stream_rejects_bad_seed():
    with pytest.raises(ConfigurationError):
        RngStreamSpec(-1)
    with pytest.raises(ConfigurationError):
        RngStreamSpec(2**64)


def test_parallel_map_keeps_order():
    items = list(range(20))
    assert parallel_map(lambda x: x * x, items, threads=4) == [x * x for x in items]
    assert [len(r) for r in batch_ranges(10, 4)] == [4, 4, 2]


def test_bm_starts_at_origin_and_is_reproducible():
    g = TimeGrid(1.0, 256)
    p = simulate_bm(1, g, RngStreamSpec(1, 0))
    q = simulate_bm(1, g, RngStreamSpec(1, 0))
    assert p.points[0, 0] == 0
    assert np.array_equal(p.points, q.points)


def test_batch_rows_match_single_paths():
    g = TimeGrid(1.0, 128)
    batch = brownian_batch(2, g, 5, [3, 9])
    assert np.array_equal(batch[1], simulate_bm(2, g, RngStreamSpec(5, 9)).points)


def test_terminal_variance_is_horizon():
    w = terminal_values(1, 1.0, 10**4, 11)[:, 0]
    var = w.var(ddof=1)
    se = np.sqrt(2 / (len(w) - 1))
    assert abs(var - 1) < 3 * se


@pytest.mark.parametrize("c", [2, 3])
def test_brownian_scaling(c):
    small = c * terminal_values(1, 1.0, 10**4, 21)[:, 0]
    big = terminal_values(1, float(c * c), 10**4, 22)[:, 0]
    assert stats.ks_2samp(small, big).pvalue > 0.01


def test_replicas_uncorrelated():
    g = TimeGrid(1.0, 8)
    w0 = np.array([simulate_bm(1, g, RngStreamSpec(s, 0)).endpoint[0] for s in range(10**4)])
    w1 = np.array([simulate_bm(1, g, RngStreamSpec(s, 1)).endpoint[0] for s in range(10**4)])
    assert abs(np.corrcoef(w0, w1)[0, 1]) < 3 / np.sqrt(10**4)


def test_quadratic_variation():
    g = TimeGrid(1.0, 2**16)
    qv = [np.sum(np.diff(simulate_bm(1, g, RngStreamSpec(3, i)).points[:, 0]) ** 2) for i in range(100)]
    assert abs(np.mean(qv) - 1) < 0.02


def test_spherical_projection_examples():
    g = TimeGrid(1.0, 2)
    sp = spherical_project(SamplePath(g, 2, np.array([[0.0, 0.0], [3.0, 4.0], [-1.0, 0.0]])))
    assert np.allclose(sp.directions, [[1, 0], [0.6, 0.8], [-1, 0]])
    sp = spherical_project(SamplePath(g, 2, np.zeros((3, 2))), zero_convention=[0.0, 1.0])
    assert np.allclose(sp.directions, [[0, 1]] * 3)
    with pytest.raises(ConfigurationError):
        spherical_project(SamplePath(g, 2, np.zeros((3, 2))), zero_convention=[1.0, 1.0])


@given(st.integers(0, 2**32), st.integers(2, 5))
def test_projection_unit_norm(seed, dim):
    p = simulate_bm(dim, TimeGrid(1.0, 64), RngStreamSpec(seed))
    d = spherical_project(p).directions
    assert np.all(np.abs(np.linalg.norm(d, axis=1) - 1) <= 1e-12)


def test_perturbed_small_mu_nonnegative():
    y = simulate_perturbed_bm(1e-12, TimeGrid(1.0, 1024), RngStreamSpec(2)).points[:, 0]
    assert np.all(y >= -1e-9)
    with pytest.raises(ConfigurationError):
        simulate_perturbed_bm(0.0, TimeGrid(1.0, 8), RngStreamSpec(0))


def test_perturbed_mu_one_is_reflected():
    b = np.cumsum(np.random.default_rng(0).standard_normal(100))
    assert np.allclose(perturbed_from_bm(b, 1.0), -b)


def test_walsh_angles_support_and_runs():
    law = DiscreteAngleLaw.equiprobable(3)
    p = simulate_walsh_angles(TimeGrid(1.0, 2**14), law, RngStreamSpec(4))
    unmasked = p.angles[~p.zero_set_mask]
    assert np.all(law.contains(unmasked))
    assert p.zero_set_mask.mean() < 0.05
    # angle constant on each maximal unmasked run
    starts = np.flatnonzero(p.zero_set_mask)
    for a, b in zip(starts, np.append(starts[1:], len(p.angles))):
        run = p.angles[a + 1:b]
        assert len(np.unique(run)) <= 1


def test_walsh_from_bm_structure():
    b = np.array([0.0, 1.0, 2.0, -1.0, -2.0, 3.0])
    angles, mask, steps = walsh_from_bm(b, np.array([0.5, 1.5, 2.5]))
    assert list(steps) == [0.5, 0.5, 1.5, 1.5, 2.5]
    assert list(mask) == [True, False, False, True, False, True]


def test_stable_positivity_parameter_oracle():
    # Gil-Pelaez: P(Y > 0) = 1/2 + (1/pi) int_0^inf Im(phi(u)) / u du
    for alpha, beta in [(1.5, 0.5), (0.7, -0.3), (1.2, 1.0)]:
        z = np.tan(np.pi * alpha / 2)

        def integrand(u):
            phi = np.exp(-u**alpha * (1 - 1j * beta * z))
            return phi.imag / u

        val = 0.5 + integrate.quad(integrand, 0, np.inf, limit=400)[0] / np.pi
        assert abs(val - positivity_parameter(alpha, beta)) < 1e-6
    assert positivity_parameter(2.0, 0.0) == 0.5


def test_stable_alpha_two_is_gaussian_variance_two():
    x = stable_variates(2.0, 0.0, 10**5, np.random.default_rng(1))
    assert abs(x.var() - 2) < 0.05
    assert stats.kstest(x / np.sqrt(2), "norm").pvalue > 0.001


def test_stable_rejects_bad_parameters():
    with pytest.raises(ConfigurationError):
        simulate_stable_levy(2.5, 0.0, TimeGrid(1.0, 4), RngStreamSpec(0))
    with pytest.raises(ConfigurationError):
        simulate_stable_levy(1.0, 0.5, TimeGrid(1.0, 4), RngStreamSpec(0))


def test_dirichlet_partition_and_marginal():
    law = DiscreteAngleLaw(np.array([0.0, 2.0, 4.0]), np.array([0.2, 0.3, 0.5]))
    theta = 2.0
    g = TimeGrid(1.0, 2**10)
    masses = []
    for i in range(4000):
        p = simulate_dirichlet_angle_process(theta, law, RngStreamSpec(9, i), g)
        seg = p.segments
        assert abs(np.sum(seg[:, 1] - seg[:, 0]) - 1) < 1e-12
        masses.append(p.occupation(lambda a: a == 4.0))
    ks = stats.kstest(masses, stats.beta(theta * 0.5, theta * 0.5).cdf).statistic
    assert ks < 0.03


def test_excursion_count_examples():
    assert excursion_count_process([0.0], 0.3) == 1
    assert excursion_count_process([0.0, 0.5], 0.75) == 2
    with pytest.raises(DomainError):
        excursion_count_process([0.1], 0.5)


@given(st.lists(st.floats(0.001, 1.0), min_size=0, max_size=10), st.floats(0.001, 1.0))
def test_excursion_count_at_least_one(zs, t):
    assert excursion_count_process([0.0] + zs, t) >= 1


def test_angle_law_validation():
    with pytest.raises(ConfigurationError):
        DiscreteAngleLaw(np.array([0.0, 1.0]), np.array([0.3, 0.3]))
    law = DiscreteAngleLaw.equiprobable(4)
    assert list(law.category(np.array([law.values[2], 0.123, np.nan]))) == [2, -1, -1]
    assert UniformAngleLaw().contains(np.array([0.0, 7.0])).tolist() == [True, False]
