import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from occlab.errors import ConfigurationError, DomainError
from occlab.paths import TimeGrid, brownian_batch
from occlab.quadrants import (QuadrantSummary, event_A, min_law_exact, min_law_mc_verdicts,
                              monotone_trend_verdict, reflection_symmetry_verdict, run_quadrant_trial,
                              scan_from_summary, scaling_scan, simulate_quadrant_summaries, summarize_paths,
                              trial_from_summary)
from occlab.rng import RngStreamSpec


@pytest.fixture(scope="module")
def summary():
    return simulate_quadrant_summaries(40000, 2**11, 77)


def _closed_form(delta):
    mpmath.mp.dps = 40
    d = mpmath.mpf(delta)
    Phi = mpmath.ncdf
    return float(2 * Phi(d) - 1), float(mpmath.mpf(1) / 2 - 2 * Phi(-d) + Phi(-2 * d))


@pytest.mark.parametrize("delta", [1e-3, 0.01, 0.05, 0.1, 0.2, 1.0, 3.0])
def test_min_law_exact_against_closed_form(delta):
    p1, p2 = min_law_exact(delta)
    r1, r2 = _closed_form(delta)
    assert p1 == pytest.approx(r1, rel=1e-12)
    assert p2 == pytest.approx(r2, rel=1e-9)


def test_min_law_small_delta_limits():
    p1, _ = min_law_exact(0.001)
    _, p2 = min_law_exact(0.01)
    assert abs(p1 / 0.001 / np.sqrt(2 / np.pi) - 1) < 0.005
    assert abs(p2 / 0.01**3 * np.sqrt(2 * np.pi) - 1) < 0.02
    tiny = min_law_exact(1e-9)
    assert tiny[0] < 1e-8 and tiny[1] < 1e-20
    with pytest.raises(DomainError):
        min_law_exact(0.0)


def test_summary_matches_reference_paths():
    g = TimeGrid(1.0, 512)
    s = simulate_quadrant_summaries(50, 512, 3, batch=16)
    ref = summarize_paths(brownian_batch(2, g, 3, range(50)))
    assert np.array_equal(s.counts, ref.counts)
    assert np.array_equal(s.final_q, ref.final_q)
    assert np.allclose(s.x_min, ref.x_min) and np.allclose(s.x_end, ref.x_end)


def test_summary_independent_of_threads_and_batch():
    a = simulate_quadrant_summaries(300, 256, 4, batch=50, threads=1)
    b = simulate_quadrant_summaries(300, 256, 4, batch=128, threads=3)
    assert np.array_equal(a.counts, b.counts) and np.array_equal(a.final_q, b.final_q)


def test_event_A_integer_boundaries():
    counts = np.array([[70, 10, 10, 10], [61, 20, 10, 9], [60, 20, 20, 0]])
    s = QuadrantSummary(100, counts, np.zeros(3, np.int8), np.zeros(3), np.zeros(3))
    assert event_A(s, 0.1).tolist() == [True, False, False]


def test_trial_invariants(summary):
    res = trial_from_summary(summary, 0.1)
    assert res.n_joint <= res.n_hits_A <= res.n_paths
    assert res.n_hits_A > 0
    assert res.conditional_estimate == res.n_joint / res.n_hits_A
    assert res.wilson_interval[0] <= res.conditional_estimate <= res.wilson_interval[1]
    assert 0.1 <= res.mean_mu_Q3_given_A <= 0.2
    row = res.row()
    assert list(row) == ["epsilon", "n_paths", "p_A_hat", "p_joint_hat", "cond_hat", "wilson_lo", "wilson_hi",
                         "mean_muQ3_given_A"]


def test_reflection_symmetry(summary):
    assert reflection_symmetry_verdict(trial_from_summary(summary, 0.1)).passed


def test_split_half_joint_counts(summary):
    half = summary.n_paths // 2
    a = trial_from_summary(summary.subset(slice(0, half)), 0.1)
    b = trial_from_summary(summary.subset(slice(half, None)), 0.1)
    se = np.sqrt(a.p_joint / half + b.p_joint / half)
    assert abs(a.p_joint - b.p_joint) <= 3 * se + 1 / half


def test_epsilon_preconditions():
    with pytest.raises(ConfigurationError):
        run_quadrant_trial(0.2, 10, 2**12, RngStreamSpec(0))
    with pytest.raises(ConfigurationError):
        run_quadrant_trial(0.05, 10, 512, RngStreamSpec(0))


def test_no_hits_is_inconclusive():
    res = run_quadrant_trial(0.04, 5, 2**11, RngStreamSpec(1))
    assert res.inconclusive and np.isnan(res.conditional_estimate)
    assert reflection_symmetry_verdict(res).status == "inconclusive"


def test_scan(summary):
    scan = scan_from_summary(summary, [0.07, 0.1, 0.13, 0.16])
    assert len(scan.rows()) == 4
    assert 0.3 < scan.slope_A < 3.0
    assert monotone_trend_verdict(scan).status in ("pass", "fail")
    with pytest.raises(ConfigurationError):
        scan_from_summary(summary, [0.1, 0.12, 0.14])
    with pytest.raises(ConfigurationError):
        scaling_scan([0.01, 0.1, 0.12, 0.14], 10, 512, RngStreamSpec(0))


def test_min_law_monte_carlo(summary):
    out = min_law_mc_verdicts(summary)
    for d, m in out.items():
        assert m["match"].passed
        assert m["bias_direction"].passed


@given(st.floats(1e-4, 5.0))
def test_min_law_probabilities_ordered(delta):
    p1, p2 = min_law_exact(delta)
    assert 0 <= p2 <= p1 <= 1
