import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from occlab.errors import ConfigurationError, DomainError
from occlab.paths import DiscreteAngleLaw
from occlab.sampling_laws import (BMSignSampler, BetaLaw, ConverseSampler, PointMass, WalshSectorSampler,
                                  beta_cdf, centered_edges, converse_example_stats, converse_exact,
                                  converse_tuples, endpoint_surface_f, exchangeability_chi_square,
                                  homogeneity_chi_square, ks_distance, ks_verdict, levy_beta_conditionals,
                                  petit_law_check, power_weight_cdf, power_weight_identity_check,
                                  sampling_identity_check, stationary_weight_discrepancy, uniform_half_cdf,
                                  walsh_tuples, wilson_interval)


def test_beta_cdf_examples():
    arcsine = BetaLaw(0.5, 0.5)
    assert beta_cdf(arcsine, 0.5) == pytest.approx(0.5, abs=1e-15)
    x = np.linspace(0, 1, 101)
    assert np.allclose(beta_cdf(arcsine, x), 2 / np.pi * np.arcsin(np.sqrt(x)), atol=1e-9)
    for law in [BetaLaw(1.5, 0.5), BetaLaw(0.5, 3.0)]:
        assert beta_cdf(law, 0.0) == 0 and beta_cdf(law, 1.0) == 1
    with pytest.raises(DomainError):
        beta_cdf(arcsine, 1.5)
    with pytest.raises(ConfigurationError):
        BetaLaw(0.0, 1.0)


@pytest.mark.parametrize("a,b", [(0.5, 0.5), (1.5, 0.5), (0.5, 2.0), (0.5, 1.5), (3.0, 7.0)])
def test_beta_cdf_against_mpmath(a, b):
    mpmath.mp.dps = 30
    for x in [0.001, 0.1, 0.37, 0.5, 0.93, 0.999]:
        ref = float(mpmath.betainc(a, b, 0, x, regularized=True))
        assert abs(beta_cdf(BetaLaw(a, b), x) - ref) < 1e-12


def test_ks_distance_examples():
    assert ks_distance([0.5], lambda x: x) == pytest.approx(0.5)
    x = np.random.default_rng(0).random(10**5)
    assert ks_distance(x, lambda t: t) < 1.95 / np.sqrt(len(x))
    # agrees with scipy's one-sample statistic
    y = np.random.default_rng(1).beta(0.5, 0.5, 2000)
    assert ks_distance(y, stats.beta(0.5, 0.5).cdf) == pytest.approx(stats.kstest(y, stats.beta(0.5, 0.5).cdf).statistic)
    with pytest.raises(DomainError):
        ks_distance([], lambda t: t)


@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=50))
def test_ks_distance_bounds_and_monotone_invariance(xs):
    d = ks_distance(xs, lambda t: np.asarray(t))
    assert 0 <= d <= 1
    # strictly increasing transform applied to both samples and CDF
    d2 = ks_distance(np.asarray(xs) ** 3, lambda t: np.cbrt(np.asarray(t)))
    assert d2 == pytest.approx(d, abs=1e-9)


def test_ks_verdict_inconclusive_on_empty():
    assert ks_verdict(np.array([]), BetaLaw(1, 1), 0.1).status == "inconclusive"


def test_wilson_interval_against_statsmodels_formula():
    lo, hi = wilson_interval(22, 583)
    z = 1.959963984540054
    p, n = 22 / 583, 583
    c = (p + z * z / (2 * n)) / (1 + z * z / n)
    h = z / (1 + z * z / n) * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    assert (lo, hi) == pytest.approx((c - h, c + h))
    assert wilson_interval(0, 0) == (0.0, 1.0)
    assert wilson_interval(0, 10)[0] == 0.0


def test_sampling_identity_bm_and_control():
    assert sampling_identity_check(BMSignSampler(2**10, 1), 20000).passed
    assert sampling_identity_check(BMSignSampler(2**10, 2, surrogate=True), 20000).passed


def test_sampling_identity_walsh_and_converse():
    assert sampling_identity_check(WalshSectorSampler(2**9, 3), 10000).passed
    assert not sampling_identity_check(ConverseSampler(1 / 3, 4), 5000).passed


def test_levy_beta_conditionals_bm():
    res = levy_beta_conditionals(2.0, 0.0, 30000, 2**12, 5)
    assert res["unconditional"].statistic < 0.02
    assert res["given_positive"].statistic < 0.03
    assert res["given_negative"].statistic < 0.03


def test_petit_law_small_run():
    res = petit_law_check(0.5, 30000, 2**12, 6)
    assert res["unconditional"].statistic < 0.025
    assert res["given_negative"].statistic < 0.035
    with pytest.raises(ConfigurationError):
        petit_law_check(0.0, 10, 16)


def test_converse_exact_values():
    assert converse_exact(0.5) == (0.5, 0.5)
    p = converse_exact(1 / 3)
    assert p[0] == pytest.approx(2 / 3) and p[1] == pytest.approx(5 / 9)
    assert p[0] + (1 - p[0]) == 1
    with pytest.raises(DomainError):
        converse_exact(1.0)


def test_converse_example_stats():
    res = converse_example_stats(1 / 3, 20000, 7)
    assert res["match"].passed
    assert res["two_exchangeable"].passed


def test_exchangeability_constant_process_and_converse():
    const = lambda s, r, term: (np.repeat(np.random.default_rng([s, r.start]).integers(0, 3, (len(r), 1)), 3, axis=1),)
    assert exchangeability_chi_square(const, 3, 5000, 1).passed
    conv = lambda s, r, term: converse_tuples(1 / 3, 2, s, r, term)
    assert not exchangeability_chi_square(conv, 2, 10000, 2).passed


def test_exchangeability_walsh_small():
    law = DiscreteAngleLaw.equiprobable(3)
    sampler = lambda s, r, term: walsh_tuples(2**8, law, 2, s, r, term)
    assert exchangeability_chi_square(sampler, 3, 4000, 3).passed


@given(st.permutations([0, 1, 2]))
def test_chi_square_relabel_invariant(perm):
    rng = np.random.default_rng(0)
    a = rng.integers(0, 3, (500, 2))
    b = rng.integers(0, 3, (500, 2))
    p = np.asarray(perm)
    assert homogeneity_chi_square(a, b, 3).statistic == pytest.approx(homogeneity_chi_square(p[a], p[b], 3).statistic)


def test_chi_square_cell_budget():
    with pytest.raises(ConfigurationError):
        homogeneity_chi_square(np.zeros((2, 10), int), np.zeros((2, 10), int), 3)


def test_weight_discrepancy_oracles():
    assert stationary_weight_discrepancy(PointMass(0.0), 1.0) == (0.0, 0.0)
    d, _ = stationary_weight_discrepancy(stats.expon(scale=0.5), 1.3)
    assert abs(d) < 1e-6
    d, _ = stationary_weight_discrepancy(stats.uniform(), 1.0)
    exact = (1 - np.exp(-1)) - 2 * np.exp(-1)
    assert d == pytest.approx(exact, abs=1e-9) and abs(d) > 0.01
    mc, se = stationary_weight_discrepancy(lambda g, n: g.random(n), 1.0, n_mc=10**5)
    assert abs(mc - exact) < 4 * se
    with pytest.raises(ConfigurationError):
        stationary_weight_discrepancy(PointMass(), 0.0)


def test_power_weight_identity():
    assert power_weight_identity_check(power_weight_cdf(2.0), 20000, 2**10, 1).passed
    assert not power_weight_identity_check(uniform_half_cdf, 40000, 2**10, 2).passed
    with pytest.raises(ConfigurationError):
        power_weight_cdf(-1.0)


def test_centered_edges():
    e = centered_edges(0.25)
    assert np.allclose(e, [0, 0.125, 0.375, 0.625, 0.875, 1.0])


def test_endpoint_surface_small():
    surf, checks = endpoint_surface_f(60000, 2**8, 3, min_count=500)
    assert checks["integral"].passed
    assert checks["initial"].passed
    assert np.all((surf.f_hat[np.isfinite(surf.f_hat)] >= 0) & (surf.f_hat[np.isfinite(surf.f_hat)] <= 1))
